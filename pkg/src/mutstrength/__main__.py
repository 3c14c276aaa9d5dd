from mutstrength.cli import main
import sys
sys.exit(main())
