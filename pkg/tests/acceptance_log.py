"""Shared pass/fail record for the acceptance criteria."""

LINES: dict = {}


def record(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})"
    LINES[number] = line
    print(line)
    return line
