import sys
from otfuse.cli import main
sys.exit(main())
