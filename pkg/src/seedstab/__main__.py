import sys

from seedstab.cli import main

sys.exit(main())
