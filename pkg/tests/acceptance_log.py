"""Collects one result line per acceptance criterion for the terminal summary."""

LINES = []


def report(label, ok, detail):
    line = f"criterion {label:>3}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    LINES.append(line)
    assert ok, line
