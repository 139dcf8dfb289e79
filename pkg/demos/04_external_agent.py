"""
An external agent speaking the wire protocol
============================================

Run directly, this file is an agent process: it reads requests on stdin and
answers on stdout. Attach it to the harness with

    python3 -m apsuite run --env LightDark-v0 --agent exec:demos/04_external_agent.py \
        --episodes 5 --out runs/external

Any language works as long as it speaks newline-delimited JSON frames.
"""

import sys

import numpy as np

from apsuite.protocol import Channel


def main():
    chan = Channel(sys.stdin.buffer, sys.stdout.buffer)
    rng = None
    spec = None
    while True:
        msg = chan.receive(allow_eof=True)
        if msg is None:
            return
        reply = {"reply_to": msg["seq"]}
        if msg["type"] in ("reset", "step"):
            if msg["type"] == "reset":
                spec = msg["spec"]
                rng = np.random.default_rng(msg["seed"])
            # small random moves, neutral prediction
            reply["type"] = "act"
            reply["action"] = rng.uniform(-0.5, 0.5, spec["base_action_dim"])
            reply["prediction"] = np.zeros(spec["prediction_size"])
        else:
            reply["type"] = "ack"
        chan.send(reply)
        if msg["type"] == "close":
            return


if __name__ == "__main__":
    main()
