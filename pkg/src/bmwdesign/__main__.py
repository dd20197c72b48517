import sys

from bmwdesign.cli import main

sys.exit(main())
