"""Line-delimited sandbox runner.

Reads one JSON request per line from stdin:
    {"program": str, "timeout_ms": int, "memory_limit_bytes": int?}
and writes one JSON result per line to stdout:
    {"kind": "pass"|"assert_fail"|"crash"|"timeout", "exception_type"?: str,
     "message"?: str, "duration_ms": int}

Each program runs in a freshly forked child with its own process group, so
no state survives between requests. A malformed request yields
{"kind": "protocol_error", ...}. Exits 0 when stdin closes.
"""

import json
import os
import select
import signal
import sys
import time

MAX_MESSAGE = 4096


def _emit(obj):
    sys.stdout.write(json.dumps(obj, separators=(",", ":")) + "\n")
    sys.stdout.flush()


def _child(program, memory_limit, wfd):
    os.setpgrp()
    try:
        if memory_limit:
            import resource

            resource.setrlimit(resource.RLIMIT_AS, (memory_limit, memory_limit))
    except Exception:
        pass
    null = os.open(os.devnull, os.O_RDWR)
    for fd in (0, 1, 2):
        os.dup2(null, fd)
    result = {"kind": "pass"}
    try:
        code = compile(program, "<candidate>", "exec")
        exec(code, {"__name__": "__main__", "__builtins__": __builtins__})
    except AssertionError as e:
        result = {
            "kind": "assert_fail",
            "exception_type": "AssertionError",
            "message": str(e)[:MAX_MESSAGE],
        }
    except SystemExit as e:
        if e.code not in (None, 0):
            result = {
                "kind": "crash",
                "exception_type": "SystemExit",
                "message": str(e.code)[:MAX_MESSAGE],
            }
    except BaseException as e:  # noqa: B902
        try:
            msg = str(e)[:MAX_MESSAGE]
        except BaseException:
            msg = ""
        result = {"kind": "crash", "exception_type": type(e).__name__, "message": msg}
    try:
        os.write(wfd, json.dumps(result).encode("utf-8"))
    finally:
        os._exit(0)


def run(program, timeout_ms, memory_limit):
    rfd, wfd = os.pipe()
    start = time.monotonic()
    pid = os.fork()
    if pid == 0:
        os.close(rfd)
        _child(program, memory_limit, wfd)
    os.close(wfd)
    deadline = start + timeout_ms / 1000.0
    chunks = []
    timed_out = False
    while True:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            timed_out = True
            break
        ready, _, _ = select.select([rfd], [], [], remaining)
        if not ready:
            timed_out = True
            break
        data = os.read(rfd, 65536)
        if not data:
            break
        chunks.append(data)
    os.close(rfd)
    if timed_out:
        try:
            os.killpg(pid, signal.SIGKILL)
        except OSError:
            try:
                os.kill(pid, signal.SIGKILL)
            except OSError:
                pass
    _, status = os.waitpid(pid, 0)
    elapsed = int((time.monotonic() - start) * 1000)
    if timed_out:
        return {"kind": "timeout", "duration_ms": max(elapsed, timeout_ms)}
    raw = b"".join(chunks)
    try:
        result = json.loads(raw.decode("utf-8"))
    except Exception:
        if os.WIFSIGNALED(status):
            name = "Signal" + str(os.WTERMSIG(status))
        else:
            name = "AbnormalExit"
        result = {"kind": "crash", "exception_type": name}
    result["duration_ms"] = elapsed
    return result


def _parse(line):
    req = json.loads(line)
    if not isinstance(req, dict):
        raise ValueError("request must be an object")
    program = req.get("program")
    timeout_ms = req.get("timeout_ms")
    memory = req.get("memory_limit_bytes")
    if not isinstance(program, str) or not program:
        raise ValueError("program must be a non-empty string")
    if not isinstance(timeout_ms, int) or isinstance(timeout_ms, bool) or timeout_ms <= 0:
        raise ValueError("timeout_ms must be a positive integer")
    if memory is not None and (
        not isinstance(memory, int) or isinstance(memory, bool) or memory <= 0
    ):
        raise ValueError("memory_limit_bytes must be a positive integer")
    return program, timeout_ms, memory


def main():
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            program, timeout_ms, memory = _parse(line)
        except Exception as e:
            _emit({"kind": "protocol_error", "message": str(e), "duration_ms": 0})
            continue
        _emit(run(program, timeout_ms, memory))
    return 0


if __name__ == "__main__":
    sys.exit(main())
