import sys

from controller.cli_controller import main


if __name__ == "__main__":
    sys.exit(main())
