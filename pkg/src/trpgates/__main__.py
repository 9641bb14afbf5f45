from trpgates.cli import main
import sys

sys.exit(main())
