import sys

from coalog.main import main


if __name__ == '__main__':
    sys.exit(main())
