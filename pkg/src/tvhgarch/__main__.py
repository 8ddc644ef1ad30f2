import sys

from tvhgarch.cli import main

sys.exit(main())
