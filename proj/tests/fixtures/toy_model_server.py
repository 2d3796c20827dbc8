#!/usr/bin/env python3
"""Minimal external model speaking the line protocol on stdin/stdout.

The next-token distribution depends only on the last token, so the responses
are easy to predict from the test side.

Flags:
  --no-probe    do not advertise probe / grad_cos
  --bad-norm    answer dist with probabilities summing to 1.1
  --sleep S     sleep S seconds before every dist answer
"""
import json
import math
import os
import sys
import time

VOCAB = 71


def toy_dist(tokens):
    last = tokens[-1] if tokens else 0
    weights = [1.0 + ((last * 7 + i * 3) % 11) for i in range(VOCAB)]
    total = sum(weights)
    return [w / total for w in weights]


def toy_board(tokens):
    board = []
    for sq in range(64):
        row = [0.02] * 13
        row[(sq + len(tokens)) % 13] = 1.0 - 0.02 * 12
        board.append(row)
    return board


def main():
    args = sys.argv[1:]
    probe = "--no-probe" not in args
    bad = "--bad-norm" in args
    sleep = float(args[args.index("--sleep") + 1]) if "--sleep" in args else 0.0
    caps = ["dist", "dist_batch"] + (["probe", "grad_cos"] if probe else [])
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            op = req["op"]
            if op == "info":
                resp = {"vocab": VOCAB, "caps": caps, "max_ctx": 1024}
            elif op == "dist":
                if sleep:
                    time.sleep(sleep)
                probs = toy_dist(req["tokens"])
                if bad:
                    probs = [p * 1.1 for p in probs]
                resp = {"probs": probs}
            elif op == "dist_batch":
                resp = {"probs": [toy_dist(s) for s in req["seqs"]]}
            elif op == "probe" and probe:
                resp = {"board": toy_board(req["tokens"])}
            elif op == "grad_cos" and probe:
                resp = {"cos_dist": 1.0 - math.cos(len(req["tokens"]))}
            else:
                resp = {"error": "unsupported op " + str(op)}
            if any(not (0 <= t < VOCAB) for t in req.get("tokens", [])):
                resp = {"error": "token out of range"}
        except Exception as exc:  # malformed request
            resp = {"error": str(exc)}
        sys.stdout.write(json.dumps(resp) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    try:
        main()
    except (BrokenPipeError, KeyboardInterrupt):
        # the client went away; silence the flush at interpreter exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
