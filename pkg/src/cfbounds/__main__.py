import sys

from cfbounds.cli import main

sys.exit(main())
