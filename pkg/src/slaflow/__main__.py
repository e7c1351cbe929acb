from slaflow.cli import main
import sys

sys.exit(main())
