"""Line-framed stdio bridge exposing the buffer API to other runtimes.

Each request is one JSON header line on stdin, optionally followed by raw
bytes; each response is one JSON line, optionally followed by raw bytes.
Requests are served until EOF, so a host can amortize interpreter startup
over many calls.

Requests:
  {"op": "version"}
      -> {"ok": true, "version": "..."}
  {"op": "preset", "name": "..."}
      -> {"ok": true, "text_bytes": n} + n bytes of config text
  {"op": "augment", "height": h, "width": w, "seed": s, "epoch": e,
   "index": i, "config_bytes": n}
      followed by n config bytes and h*w*3 pixel bytes
      -> {"ok": true, "height": h, "width": w} + h*w*3 output bytes

Errors answer {"ok": false, "kind": "<exception>", "error": "<message>"}.
"""

from __future__ import annotations

import json
import sys

from .bindings import BufferDescriptor, UnknownPreset, augment_buffer, engine_version, load_preset


def _read_exact(stream, n: int) -> bytes:
    data = stream.read(n)
    if data is None or len(data) != n:
        raise EOFError(f"expected {n} payload bytes, got {0 if data is None else len(data)}")
    return data


def _respond(stream, header: dict, payload: bytes = b""):
    stream.write(json.dumps(header).encode() + b"\n")
    if payload:
        stream.write(payload)
    stream.flush()


def serve(stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout.buffer
    for raw in iter(stdin.readline, b""):
        line = raw.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            op = req.get("op")
            if op == "version":
                _respond(stdout, {"ok": True, "version": engine_version()})
            elif op == "preset":
                text = load_preset(req["name"]).encode()
                _respond(stdout, {"ok": True, "text_bytes": len(text)}, text)
            elif op == "augment":
                h, w = int(req["height"]), int(req["width"])
                config_text = _read_exact(stdin, int(req["config_bytes"])).decode()
                pixels = _read_exact(stdin, h * w * 3)
                out = augment_buffer(
                    BufferDescriptor(h, w, pixels),
                    config_text,
                    int(req["seed"]),
                    int(req.get("epoch", 0)),
                    int(req.get("index", 0)),
                )
                _respond(
                    stdout,
                    {"ok": True, "height": out.height, "width": out.width},
                    out.data,
                )
            else:
                _respond(stdout, {"ok": False, "kind": "BadRequest", "error": f"unknown op {op!r}"})
        except EOFError:
            return 1
        except (UnknownPreset, KeyError, ValueError, TypeError) as exc:
            message = exc.args[0] if exc.args else str(exc)
            _respond(
                stdout,
                {"ok": False, "kind": type(exc).__name__, "error": str(message)},
            )
    return 0


if __name__ == "__main__":
    raise SystemExit(serve())
