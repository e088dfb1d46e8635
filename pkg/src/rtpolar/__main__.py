import sys

from rtpolar.cli import main

sys.exit(main())
