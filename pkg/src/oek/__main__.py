import sys

from oek.cli import main

sys.exit(main())
