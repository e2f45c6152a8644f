import sys

from onebit_ofdm.cli import main

sys.exit(main())
