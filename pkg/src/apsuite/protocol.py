"""Newline-delimited JSON messages exchanged with external agent processes.

Each frame is one UTF-8 JSON object terminated by ``\\n``. Arrays travel as
``{"__tensor__": dtype, "shape": [...], "data": base64}`` with little-endian
raw bytes, so float bit patterns survive a round trip. Every message carries
a ``seq`` number; replies name the request they answer in ``reply_to``.

Environment to agent: ``reset`` and ``step`` (answered by ``act``), ``end``
and ``close`` (answered by ``ack``).
"""

from __future__ import annotations

import base64
import binascii
import json
import math

import numpy as np

TENSOR_KEY = "__tensor__"
DTYPES = {"float32": "<f4", "float64": "<f8", "int32": "<i4", "int64": "<i8", "uint8": "u1",
          "bool": "?"}
ENV_TYPES = ("reset", "step", "end", "close")
AGENT_TYPES = ("act", "ack")
REPLY_TYPE = {"reset": "act", "step": "act", "end": "ack", "close": "ack"}


class ProtocolError(Exception):
    """Malformed frame or contract violation; ``offset`` is a byte position."""

    def __init__(self, message, offset=0):
        super().__init__(f"{message} (at byte {offset})")
        self.reason = message
        self.offset = offset


def _encode_value(v):
    if isinstance(v, np.ndarray) or isinstance(v, np.generic) and not isinstance(v, np.bool_):
        a = np.asarray(v)
        name = a.dtype.name
        if name not in DTYPES:
            raise ProtocolError(f"unsupported tensor dtype {name}")
        raw = np.ascontiguousarray(a, dtype=DTYPES[name]).tobytes()
        return {TENSOR_KEY: name, "shape": list(a.shape),
                "data": base64.b64encode(raw).decode("ascii")}
    if isinstance(v, dict):
        for k in v:
            if not isinstance(k, str):
                raise ProtocolError(f"non-string key {k!r}")
        return {k: _encode_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_encode_value(x) for x in v]
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        raise ProtocolError("non-finite float outside a tensor")
    if v is None or isinstance(v, (bool, int, float, str)):
        return v
    raise ProtocolError(f"cannot encode {type(v).__name__}")


def encode(message: dict) -> bytes:
    """One frame, including the trailing newline."""
    if not isinstance(message, dict):
        raise ProtocolError("message must be a dict")
    body = json.dumps(_encode_value(message), separators=(",", ":"), allow_nan=False)
    return body.encode("utf-8") + b"\n"


def _decode_tensor(obj, offset):
    if set(obj) != {TENSOR_KEY, "shape", "data"}:
        raise ProtocolError("tensor needs exactly __tensor__, shape and data", offset)
    name, shape, data = obj[TENSOR_KEY], obj["shape"], obj["data"]
    if name not in DTYPES:
        raise ProtocolError(f"unknown tensor dtype {name!r}", offset)
    if not isinstance(shape, list) or not all(
            isinstance(n, int) and not isinstance(n, bool) and n >= 0 for n in shape):
        raise ProtocolError("tensor shape must be a list of non-negative ints", offset)
    if not isinstance(data, str):
        raise ProtocolError("tensor data must be a base64 string", offset)
    try:
        raw = base64.b64decode(data.encode("ascii"), validate=True)
    except (binascii.Error, UnicodeEncodeError):
        raise ProtocolError("invalid base64 tensor data", offset) from None
    dt = np.dtype(DTYPES[name])
    count = math.prod(shape)
    if len(raw) != count * dt.itemsize:
        raise ProtocolError(f"tensor payload has {len(raw)} bytes, shape needs "
                            f"{count * dt.itemsize}", offset)
    arr = np.frombuffer(raw, dtype=dt).reshape(shape)
    return arr.astype(dt.newbyteorder("="), copy=True)


def _decode_value(v, offset):
    if isinstance(v, dict):
        if TENSOR_KEY in v:
            return _decode_tensor(v, offset)
        return {k: _decode_value(x, offset) for k, x in v.items()}
    if isinstance(v, list):
        return [_decode_value(x, offset) for x in v]
    return v


def _reject_constant(name):
    raise ValueError(f"non-finite literal {name}")


def decode(frame: bytes, base_offset=0) -> dict:
    """Parse one frame. Errors carry the byte offset within the stream."""
    if not isinstance(frame, (bytes, bytearray)):
        raise ProtocolError("frame must be bytes", base_offset)
    if not frame.endswith(b"\n"):
        raise ProtocolError("truncated frame (no terminating newline)", base_offset + len(frame))
    body = bytes(frame[:-1])
    nl = body.find(b"\n")
    if nl >= 0:
        raise ProtocolError("embedded newline in frame", base_offset + nl)
    try:
        text = body.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ProtocolError("invalid UTF-8", base_offset + e.start) from None
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        pos = len(text[:e.pos].encode("utf-8"))
        raise ProtocolError(f"invalid JSON: {e.msg}", base_offset + pos) from None
    except (ValueError, RecursionError) as e:
        raise ProtocolError(f"invalid JSON: {e}", base_offset) from None
    if not isinstance(obj, dict):
        raise ProtocolError("frame must hold a JSON object", base_offset)
    seq = obj.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        raise ProtocolError("missing or invalid seq", base_offset)
    if not isinstance(obj.get("type"), str):
        raise ProtocolError("missing message type", base_offset)
    return _decode_value(obj, base_offset)


def messages_equal(a, b):
    """Structural equality with bitwise comparison of arrays and floats."""
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return (isinstance(a, np.ndarray) and isinstance(b, np.ndarray) and a.dtype == b.dtype
                and a.shape == b.shape and a.tobytes() == b.tobytes())
    if isinstance(a, dict):
        return isinstance(b, dict) and a.keys() == b.keys() and all(
            messages_equal(a[k], b[k]) for k in a)
    if isinstance(a, (list, tuple)):
        return isinstance(b, (list, tuple)) and len(a) == len(b) and all(
            messages_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, float) and isinstance(b, float):
        return np.float64(a).tobytes() == np.float64(b).tobytes()
    return type(a) is type(b) and a == b


class Channel:
    """Framed reader/writer over a pair of binary streams.

    Tracks the stream byte offset so decode errors point into the stream, and
    enforces strictly increasing ``seq`` on incoming messages.
    """

    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer
        self.offset = 0
        self.next_seq = 0
        self.last_peer_seq = -1

    def send(self, message: dict):
        msg = dict(message)
        msg["seq"] = self.next_seq
        self.next_seq += 1
        self.writer.write(encode(msg))
        self.writer.flush()
        return msg["seq"]

    def receive(self, allow_eof=False):
        """Next message; at end of stream return ``None`` if ``allow_eof``."""
        line = self.reader.readline()
        if not line:
            if allow_eof:
                return None
            raise ProtocolError("peer closed the stream", self.offset)
        start = self.offset
        self.offset += len(line)
        msg = decode(line, start)
        if msg["seq"] <= self.last_peer_seq:
            raise ProtocolError(f"sequence number {msg['seq']} not increasing", start)
        self.last_peer_seq = msg["seq"]
        return msg


def check_reply(request_type, request_seq, reply, offset=0):
    """Validate that ``reply`` answers the request; returns the reply."""
    expected = REPLY_TYPE[request_type]
    if reply.get("type") != expected:
        raise ProtocolError(f"expected {expected!r} reply, got {reply.get('type')!r}", offset)
    if reply.get("reply_to") != request_seq:
        raise ProtocolError(f"reply_to {reply.get('reply_to')!r} does not match seq {request_seq}",
                            offset)
    if expected == "act":
        for key in ("action", "prediction"):
            if not isinstance(reply.get(key), (np.ndarray, list)):
                raise ProtocolError(f"act reply lacks {key}", offset)
    return reply


def serve(agent, stdin, stdout):
    """Run an in-process agent behind the protocol (agent side of the pipe).

    ``agent`` follows the built-in agent interface; this is how a Python agent
    script can attach to ``run --agent exec:PATH``.
    """
    chan = Channel(stdin, stdout)
    while True:
        msg = chan.receive(allow_eof=True)
        if msg is None:
            return
        kind = msg["type"]
        if kind not in ENV_TYPES:
            raise ProtocolError(f"unexpected message type {kind!r}")
        reply = {"type": REPLY_TYPE[kind], "reply_to": msg["seq"]}
        if kind == "reset":
            agent.start(msg["env_id"], msg["spec"], msg["seed"])
            action, prediction = agent.act(msg["observation"], None)
        elif kind == "step":
            action, prediction = agent.act(msg["observation"], msg["feedback"])
        if kind in ("reset", "step"):
            reply["action"] = np.asarray(action, dtype=np.float64)
            reply["prediction"] = np.asarray(prediction, dtype=np.float64)
        chan.send(reply)
        if kind == "close":
            return
