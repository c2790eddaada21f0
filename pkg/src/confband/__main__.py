import sys

from confband.cli import main

sys.exit(main())
