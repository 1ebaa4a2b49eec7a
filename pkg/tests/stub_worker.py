"""Stub sandbox worker for executor tests: sleeps, crashes, or replies on command.

Speaks the executor wire protocol. The request's `source` field selects the
behavior:

    sleep <seconds>   block (for timeout tests), then answer ok
    crash             exit nonzero without writing a response
    garbage           write a non-JSON line
    ok <tagged-json>  answer ok with the given tagged value
    noresult          answer status no_result
    stdout <text>     answer no_result carrying <text> as stdout
    error <text>      answer status error with <text> as stderr
"""

import json
import sys
import time


def main() -> None:
    request = json.loads(sys.stdin.readline())
    source = request.get("source", "")
    reply = {"id": request.get("id"), "status": "error", "stdout": "", "stderr": "unknown directive"}

    if source.startswith("sleep "):
        time.sleep(float(source.split()[1]))
        reply.update(status="ok", value={"type": "int", "value": "1"}, stderr="")
    elif source == "crash":
        sys.exit(3)
    elif source == "garbage":
        print("this is not json")
        return
    elif source.startswith("ok "):
        reply.update(status="ok", value=json.loads(source[3:]), stderr="")
    elif source == "noresult":
        reply.update(status="no_result", stderr="")
    elif source.startswith("stdout "):
        reply.update(status="no_result", stdout=source[7:] + "\n", stderr="")
    elif source.startswith("error "):
        reply.update(status="error", stderr=source[6:])

    print(json.dumps(reply))


if __name__ == "__main__":
    main()
