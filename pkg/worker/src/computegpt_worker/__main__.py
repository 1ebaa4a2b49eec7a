"""Entry point: read one request line from stdin, write one response line, exit."""

import sys

from . import run_request


def main() -> int:
    line = sys.stdin.readline()
    if not line.strip():
        print('{"id": null, "status": "error", "stdout": "", "stderr": "empty request"}')
        return 1
    sys.stdout.write(run_request(line) + "\n")
    sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
