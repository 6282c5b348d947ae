import sys

from nafas.cli import main

sys.exit(main())
