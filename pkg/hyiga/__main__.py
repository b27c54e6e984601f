import sys

from hyiga.cli.main import main

sys.exit(main())
