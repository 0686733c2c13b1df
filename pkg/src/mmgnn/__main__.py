"""Allow running with: python -m mmgnn"""

from mmgnn.cli import main

main()
