import sys

from volterra_picard.cli import main

sys.exit(main())
