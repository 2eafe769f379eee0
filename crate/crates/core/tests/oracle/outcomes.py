"""Computes every execution fact a session could consult, for each problem
of a fixture file, without going through the engine's runner.

Prints one JSON object per problem:
  matrix[t][c]     outcome of test t on code c
  reference[t]     outcome of test t on the reference
  corrected[t]     outcomes of the value-corrected test t per code, or null
  correct[c]       whether code c passes every hidden test
Outcomes are "pass", "fail" or "crash".
"""

import ast
import json
import sys


def outcome(prefix, source, assertion):
    env = {}
    try:
        exec(prefix + "\n" + source + "\n" + assertion, env)
        return "pass"
    except AssertionError:
        return "fail"
    except BaseException:
        return "crash"


def value_of(prefix, source, expr):
    env = {}
    try:
        exec(prefix + "\n" + source, env)
        return True, eval(expr, env)
    except BaseException:
        return False, None


def checked_call(assertion, entry):
    node = ast.parse(assertion).body[0]
    if not isinstance(node, ast.Assert):
        return None
    test = node.test
    if isinstance(test, ast.Compare) and len(test.ops) == 1 and isinstance(test.ops[0], ast.Eq):
        call = test.left
    elif isinstance(test, ast.UnaryOp) and isinstance(test.op, ast.Not):
        call = test.operand
    else:
        call = test
    if isinstance(call, ast.Call) and isinstance(call.func, ast.Name) and call.func.id == entry:
        return ast.unparse(call)
    return None


def main(path):
    for line in open(path):
        if not line.strip():
            continue
        rec = json.loads(line)
        prefix, ref, entry = rec["prefix"], rec["reference"], rec["entry_point"]
        codes = [c["source"] for c in sorted(rec["codes"], key=lambda c: c["id"])]
        tests = [t["assertion"] for t in sorted(rec["tests"], key=lambda t: t["id"])]
        matrix = [[outcome(prefix, c, t) for c in codes] for t in tests]
        reference = [outcome(prefix, ref, t) for t in tests]
        corrected = []
        parseable = []
        for t, r in zip(tests, reference):
            call = checked_call(t, entry)
            parseable.append(call is not None)
            row = None
            if call is not None and r == "fail":
                ok, v = value_of(prefix, ref, call)
                text = repr(v)
                try:
                    stable = ok and ast.literal_eval(text) == v and len(text) < 4000
                except Exception:
                    stable = False
                if stable:
                    fixed = f"assert {call} == {text}"
                    row = [outcome(prefix, c, fixed) for c in codes]
            corrected.append(row)
        correct = [all(outcome(prefix, c, h) == "pass" for h in rec["hidden_tests"]) for c in codes]
        print(json.dumps({
            "id": rec["id"],
            "matrix": matrix,
            "reference": reference,
            "parseable": parseable,
            "corrected": corrected,
            "correct": correct,
        }))


if __name__ == "__main__":
    main(sys.argv[1])
