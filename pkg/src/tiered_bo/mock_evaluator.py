"""Stand-in external evaluator for protocol tests.

Answers each request with ``f = sum(x_j^2)`` and ``c = [-1, ...]``. The
``--mode`` flag injects protocol faults.

    python -m tiered_bo.mock_evaluator --mode ok
"""

from __future__ import annotations

import argparse
import json
import sys
import time

MODES = ("ok", "wrong-arity", "non-numeric", "garbage", "bad-id", "hang", "exit")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mode", choices=MODES, default="ok")
    parser.add_argument("--constraints", type=int, default=1)
    parser.add_argument("--fail-after", type=int, default=0,
                        help="behave normally for this many requests before the fault")
    args = parser.parse_args(argv)

    for n, line in enumerate(sys.stdin, start=1):
        req = json.loads(line)
        x = req["x"]
        reply = {"id": req["id"], "f": sum(v * v for v in x), "c": [-1.0] * args.constraints}
        mode = args.mode if n > args.fail_after else "ok"
        if mode == "wrong-arity":
            reply["c"] = reply["c"] + [0.0]
        elif mode == "non-numeric":
            reply["f"] = "not-a-number"
        elif mode == "bad-id":
            reply["id"] = req["id"] + 1000
        elif mode == "garbage":
            sys.stdout.write("this is not json\n")
            sys.stdout.flush()
            continue
        elif mode == "hang":
            time.sleep(3600)
        elif mode == "exit":
            return 3
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
