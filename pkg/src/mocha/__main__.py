import sys

from mocha.cli import main

sys.exit(main())
