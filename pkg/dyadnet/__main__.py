"""
Run the ``dyadnet`` command with ``python -m dyadnet``.

"""
import sys

from dyadnet.cli import main


sys.exit(main())
