"""Token-balance scanner for emitted SystemVerilog.

Deliberately independent of the generator: it only counts block keywords
and brackets, ignoring comments and string literals.
"""

import re

_COMMENT = re.compile(r"//[^\n]*|/\*.*?\*/", re.DOTALL)
_STRING = re.compile(r'"(?:\\.|[^"\\])*"')
_TOKEN = re.compile(r"\b(begin|end|module|endmodule|property|endproperty)\b|([()\[\]{}])")

_PAIRS = {"end": "begin", "endmodule": "module", "endproperty": "property",
          ")": "(", "]": "[", "}": "{"}


def balance_errors(text: str) -> list[str]:
    """Empty when every opener is closed by the matching closer, in order."""
    body = _STRING.sub('""', _COMMENT.sub("", text))
    stack, errors = [], []
    # "assert property (...)" uses property as an operator, not a block opener
    body = re.sub(r"\bassert\s+property\b", "assert", body)
    for m in _TOKEN.finditer(body):
        tok = m.group(1) or m.group(2)
        line = body.count("\n", 0, m.start()) + 1
        if tok in _PAIRS:
            if not stack or stack[-1][0] != _PAIRS[tok]:
                errors.append(f"line {line}: unexpected {tok!r}")
            else:
                stack.pop()
        else:
            stack.append((tok, line))
    errors += [f"line {line}: unclosed {tok!r}" for tok, line in stack]
    return errors
