import sys

from hdenseformer import main

if __name__ == '__main__':
    sys.exit(main())
