import sys

from selective_aoi.cli import main

sys.exit(main())
