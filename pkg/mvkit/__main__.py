import sys

from mvkit.cli import main

sys.exit(main())
