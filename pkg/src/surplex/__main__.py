import sys

from surplex.cli import main

sys.exit(main())
