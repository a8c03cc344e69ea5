import sys

from paramprof.cli import main

sys.exit(main())
