"""Regenerates synthetic20.jsonl.

Each problem has one correct candidate among five, a pool of equality
tests whose expected values come from randomly chosen candidates, and
hidden tests computed from the reference on separate inputs.

    python3 make_synthetic.py > synthetic20.jsonl
"""

import json
import random

SEED = 20240611

# (name, params, intent, prefix, reference body, mutant bodies, test inputs, hidden inputs)
FAMILIES = [
    ("is_even", "n", "Return True if n is even.", "",
     "return n % 2 == 0",
     ["return n % 2 == 1", "return n % 3 == 0", "return n > 0", "return n % 4 == 0"],
     ["4", "7", "6", "-3", "9"], ["2", "5", "12", "-8", "3"]),
    ("square", "n", "Return n squared.", "",
     "return n * n",
     ["return n * 2", "return n ** 3", "return abs(n) * n", "return n + n + 1"],
     ["2", "3", "-2", "1", "0"], ["4", "-5", "7"]),
    ("max_of_list", "xs", "Return the largest element of xs.", "",
     "return max(xs)",
     ["return min(xs)", "return xs[0]", "return xs[-1]", "return sorted(xs)[-2]"],
     ["[3, 1, 2]", "[1, 5]", "[7]", "[2, 9, 4]", "[4, 4, 1]"], ["[1, 8, 3]", "[5]", "[9, 2, 6]"]),
    ("count_vowels", "s", "Count the lowercase vowels in s.", "",
     "return sum(1 for c in s if c in 'aeiou')",
     ["return sum(1 for c in s if c in 'AEIOUaeiou')", "return len(s)",
      "return sum(1 for c in s if c not in 'aeiou')", "return s.count('a')"],
     ["'banana'", "'sky'", "'Apple'", "'queue'", "'tree'"], ["'education'", "'Ear'", "'rhythm'", "'abc'"]),
    ("reverse_string", "s", "Return s reversed.", "",
     "return s[::-1]",
     ["return s", "return s[1:]", "return ''.join(sorted(s))", "return s[::-1].upper()"],
     ["'abc'", "'aa'", "'ba'", "'x'", "'hello'"], ["'rust'", "'ab'", "'level'"]),
    ("factorial", "n", "Return n factorial.", "import math",
     "return math.prod(range(1, n + 1))",
     ["return math.prod(range(1, n))", "return n * (n - 1)", "return sum(range(1, n + 1))",
      "return math.prod(range(2, n + 1)) if n > 1 else 0"],
     ["3", "1", "0", "4", "2"], ["5", "6", "1", "0"]),
    ("first_digit", "n", "Return the leading decimal digit of n, ignoring sign.", "",
     "return int(str(abs(n))[0])",
     ["return n % 10", "return int(str(n)[0])", "return n // 10", "return len(str(n))"],
     ["123", "-45", "7", "90", "-8"], ["512", "-73", "4"]),
    ("sum_list", "xs", "Return the sum of xs.", "",
     "return sum(xs)",
     ["return sum(xs[1:])", "return len(xs)", "return sum(abs(x) for x in xs)", "return max(xs) + min(xs)"],
     ["[1, 2, 3]", "[5]", "[-1, 2]", "[0, 0, 4]", "[2, 2]"], ["[3, -4, 5]", "[10, 1, 1]", "[6]"]),
    ("is_palindrome", "s", "Return True if s reads the same backwards.", "",
     "return s == s[::-1]",
     ["return s[0] == s[-1]", "return len(s) % 2 == 1", "return s.lower() == s.lower()[::-1]", "return True"],
     ["'aba'", "'ab'", "''", "'Aa'", "'abca'"], ["'racecar'", "'abcd'", "'Noon'", "''", "'aa'"]),
    ("gcd", "a, b", "Return the greatest common divisor of a and b.", "import math",
     "return math.gcd(a, b)",
     ["return min(a, b)", "return a % b", "return abs(a - b)", "return math.lcm(a, b)"],
     ["12, 18", "7, 7", "9, 3", "8, 12", "5, 0"], ["14, 21", "10, 4", "6, 6", "9, 2"]),
    ("count_words", "s", "Count the whitespace-separated words in s.", "",
     "return len(s.split())",
     ["return len(s.split(' '))", "return s.count(' ') + 1", "return len(set(s.split()))", "return len(s)"],
     ["'a b c'", "'one  two'", "'hi'", "'x x'", "''"], ["'the cat sat'", "' lead'", "'a a b'", "'word'"]),
    ("clamp", "x, lo, hi", "Clamp x into the closed range [lo, hi].", "",
     "return max(lo, min(x, hi))",
     ["return min(lo, max(x, hi))", "return max(lo, x)", "return min(x, hi)", "return x"],
     ["5, 0, 10", "-3, 0, 10", "15, 0, 10", "2, 2, 2", "0, 1, 3"], ["11, 1, 9", "-1, 0, 4", "3, 0, 5"]),
    ("last_element", "xs", "Return the last element of xs.", "",
     "return xs[-1]",
     ["return xs[0]", "return xs[len(xs) - 2]", "return sorted(xs)[-1]", "return max(xs)"],
     ["[1, 2, 3]", "[3, 1]", "[9]", "[5, 7, 2]", "[4, 4]"], ["[8, 1, 3]", "[2, 6, 4]", "[3, 9, 1]"]),
    ("remove_duplicates", "xs", "Drop repeated elements of xs, keeping first occurrences in order.", "",
     "return list(dict.fromkeys(xs))",
     ["return sorted(set(xs))", "return xs", "return [x for x in xs if xs.count(x) == 1]",
      "return list(dict.fromkeys(reversed(xs)))"],
     ["[1, 2, 1]", "[3, 1, 3]", "[2, 2]", "[1, 2]", "[4]"], ["[5, 3, 5, 1]", "[2, 1, 2]", "[7, 7, 8]"]),
    ("digit_sum", "n", "Return the sum of the decimal digits of n, ignoring sign.", "",
     "return sum(int(d) for d in str(abs(n)))",
     ["return sum(int(d) for d in str(n))", "return n % 9", "return len(str(n))", "return int(str(n)[-1])"],
     ["123", "-45", "9", "70", "18"], ["-123", "58", "999"]),
    ("capitalize_words", "s", "Capitalize the first letter of every word in s.", "",
     "return ' '.join(w.capitalize() for w in s.split())",
     ["return s.title()", "return s.upper()", "return s.capitalize()", "return s"],
     ["'hello world'", "'a1b c'", "'Hi'", "'x'", "'one two'"], ["'big dog'", "'x2y z'", "'ab'"]),
    ("nth_fib", "n", "Return the n-th Fibonacci number, starting from fib(0) = 0.", "",
     "a, b = 0, 1\n    for _ in range(n):\n        a, b = b, a + b\n    return a",
     ["a, b = 1, 1\n    for _ in range(n):\n        a, b = b, a + b\n    return a",
      "a, b = 0, 1\n    for _ in range(n - 1):\n        a, b = b, a + b\n    return a",
      "a, b = 0, 1\n    for _ in range(n):\n        a, b = b, a + b\n    return b",
      "a, b = 0, 1\n    for _ in range(n):\n        a, b = b, a * b + 1\n    return a"],
     ["1", "2", "5", "0", "3"], ["6", "7", "10"]),
    ("count_positive", "xs", "Count the strictly positive elements of xs.", "",
     "return sum(1 for x in xs if x > 0)",
     ["return sum(1 for x in xs if x >= 0)", "return len(xs)", "return sum(x for x in xs if x > 0)",
      "return sum(1 for x in xs if x < 0)"],
     ["[1, -1, 0]", "[2, 3]", "[-5]", "[0, 0]", "[1, 1]"], ["[3, -2, 0, 4]", "[-1, -2]", "[5, 0]"]),
    ("average", "xs", "Return the arithmetic mean of xs.", "",
     "return sum(xs) / len(xs)",
     ["return sum(xs) // len(xs)", "return sum(xs) / (len(xs) + 1)", "return max(xs) / len(xs)",
      "return round(sum(xs) / len(xs))"],
     ["[1, 2]", "[2, 4]", "[]", "[3]", "[1, 2, 4]"], ["[1, 4]", "[2, 3, 7]", "[5, 6]"]),
    ("longest_word", "s", "Return the longest word of s, the first one on ties.", "",
     "return max(s.split(), key=len)",
     ["return min(s.split(), key=len)", "return s.split()[0]", "return sorted(s.split())[-1]",
      "return s.split()[-1]"],
     ["'a bbb cc'", "'zz y'", "'one'", "'ab cd'", "'x yy'"], ["'hi there you'", "'aa bbbb c'", "'tea pot'"]),
]


def evaluate(prefix, source, name, args):
    env = {}
    exec(prefix + "\n" + source, env)
    try:
        return True, eval(f"{name}({args})", env)
    except Exception:
        return False, None


def build(rng, family):
    name, params, intent, prefix, ref_body, mutant_bodies, test_inputs, hidden_inputs = family
    header = f"def {name}({params}):"
    reference = f"{header}\n    {ref_body}"
    sources = [reference] + [f"{header}\n    {b}" for b in mutant_bodies]

    hidden = []
    for args in hidden_inputs:
        ok, value = evaluate(prefix, reference, name, args)
        assert ok, (name, args)
        hidden.append(f"assert {name}({args}) == {value!r}")
    for s in sources[1:]:
        passes = all(evaluate(prefix, s, name, a) == evaluate(prefix, reference, name, a) for a in hidden_inputs)
        assert not passes, f"{name}: mutant survives hidden tests:\n{s}"

    order = list(range(len(sources)))
    rng.shuffle(order)
    codes = [{"id": i, "source": sources[k]} for i, k in enumerate(order)]

    tests = []
    for args in test_inputs:
        picks = list(range(len(sources)))
        rng.shuffle(picks)
        for k in picks:
            ok, value = evaluate(prefix, sources[k], name, args)
            if ok:
                tests.append(f"assert {name}({args}) == {value!r}")
                break

    discriminating = 0
    for t in tests:
        passed = 0
        for s in sources:
            env = {}
            exec(prefix + "\n" + s, env)
            try:
                exec(t, env)
                passed += 1
            except Exception:
                pass
        if 0 < passed < len(sources):
            discriminating += 1
    assert discriminating >= 2, name

    return {
        "id": f"synthetic/{name}",
        "intent": intent,
        "header": header,
        "prefix": prefix,
        "reference": reference,
        "hidden_tests": hidden,
        "entry_point": name,
        "codes": codes,
        "tests": [{"id": i, "assertion": t} for i, t in enumerate(tests)],
    }


def main():
    rng = random.Random(SEED)
    assert len(FAMILIES) == 20
    for family in FAMILIES:
        print(json.dumps(build(rng, family), sort_keys=True))


if __name__ == "__main__":
    main()
