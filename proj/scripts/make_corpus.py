#!/usr/bin/env python3
"""Rebuild data/corpus.txt from a CPython 3.10 standard library checkout.

Usage: make_corpus.py <path-to-Lib> > data/corpus.txt

Comment-only lines and trailing whitespace are dropped; each module is
separated by a blank line (blank-line runs delimit documents).
"""
import pathlib
import sys

MODULES = [
    "textwrap", "heapq", "bisect", "fractions", "statistics", "string", "shlex",
    "difflib", "csv", "fnmatch", "glob", "functools", "random", "colorsys",
    "calendar", "base64", "queue", "sched", "graphlib", "operator", "copy",
    "pprint", "reprlib", "numbers", "abc", "keyword", "contextlib",
]


def main() -> None:
    lib = pathlib.Path(sys.argv[1])
    out = []
    for name in MODULES:
        for line in (lib / f"{name}.py").read_text(encoding="utf-8").splitlines():
            line = line.rstrip()
            if line.lstrip().startswith("#"):
                continue
            out.append(line)
        out.append("")
        out.append("")
    sys.stdout.write("\n".join(out) + "\n")


if __name__ == "__main__":
    main()
