"""Shared generators for randomized tests.

Sources produced here stay inside the supported language subset on
purpose; parser rejection paths get their own targeted tests.
"""

from __future__ import annotations

import random

NAMES = ["alpha", "beta", "gamma", "delta", "omega"]


def random_expression(rng: random.Random, names: list[str], depth: int) -> str:
    if depth <= 0 or rng.random() < 0.3:
        kind = rng.choice(["name", "int", "bool", "string"])
        if kind == "name":
            return rng.choice(names)
        if kind == "int":
            return str(rng.randrange(100))
        if kind == "bool":
            return rng.choice(["true", "false"])
        return f'"s{rng.randrange(10)}"'
    kind = rng.choice(["binary", "paren", "ternary", "call", "access"])
    if kind == "binary":
        op = rng.choice(["+", "-", "*", "/", "%", "<", ">", "==", "!=", "&&", "||"])
        left = random_expression(rng, names, depth - 1)
        right = random_expression(rng, names, depth - 1)
        return f"{left} {op} {right}"
    if kind == "paren":
        return f"({random_expression(rng, names, depth - 1)})"
    if kind == "ternary":
        parts = [random_expression(rng, names, depth - 1) for _ in range(3)]
        return f"{parts[0]} ? {parts[1]} : {parts[2]}"
    if kind == "call":
        n_args = rng.randrange(3)
        args = ", ".join(random_expression(rng, names, depth - 1) for _ in range(n_args))
        recv = rng.choice(["", rng.choice(names) + "."])
        return f"{recv}{rng.choice(names)}({args})"
    return f"{rng.choice(names)}.{rng.choice(names)}"


def random_statement(rng: random.Random, names: list[str], depth: int) -> str:
    kinds = ["assign", "expr", "return", "decl"]
    if depth > 0:
        kinds += ["if", "ifelse", "while", "block"]
    kind = rng.choice(kinds)
    expr = random_expression(rng, names, 2)
    if kind == "assign":
        return f"{rng.choice(names)} = {expr};"
    if kind == "expr":
        return f"{expr};"
    if kind == "return":
        return f"return {expr};" if rng.random() < 0.8 else "return;"
    if kind == "decl":
        return f"int {rng.choice(names)} = {expr};"
    inner = random_statement(rng, names, depth - 1)
    if kind == "if":
        return f"if ({expr}) {{ {inner} }}"
    if kind == "ifelse":
        other = random_statement(rng, names, depth - 1)
        return f"if ({expr}) {{ {inner} }} else {{ {other} }}"
    if kind == "while":
        return f"while ({expr}) {{ {inner} }}"
    return f"{{ {inner} }}"


def random_method_source(rng: random.Random, name: str = "run", max_stmts: int = 5) -> str:
    n_stmts = rng.randrange(1, max_stmts)
    body = " ".join(random_statement(rng, NAMES, 2) for _ in range(n_stmts))
    return f"class Gen {{ int {name}(int alpha, int beta) {{ {body} }} }}"
