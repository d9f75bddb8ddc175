import sys

from cvsroi.cli import main

sys.exit(main())
