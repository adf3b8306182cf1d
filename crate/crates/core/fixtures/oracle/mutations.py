"""Regenerates mutations.json with the Python jsonschema validator.

    pip install jsonschema rfc3339-validator
    python3 fixtures/oracle/mutations.py
"""
import copy
import json
import os

import jsonschema

HERE = os.path.dirname(os.path.abspath(__file__))
CORE = os.path.dirname(os.path.dirname(HERE))
schema = json.load(open(os.path.join(CORE, "src/receipt/schema.v0.1.json")))
validator = jsonschema.Draft202012Validator(schema, format_checker=jsonschema.FormatChecker())

KIND = {
    "required": "missing_required",
    "additionalProperties": "unknown_field",
    "enum": "bad_enum",
    "type": "bad_type",
    "const": "bad_const",
    "format": "bad_format",
    "minLength": "bad_format",
    "minimum": "bad_format",
    "uniqueItems": "bad_format",
}


def esc(k):
    return str(k).replace("~", "~0").replace("/", "~1")


def pointer(parts):
    return "".join("/" + esc(p) for p in parts)


def expected(doc):
    out = []
    for e in validator.iter_errors(doc):
        base = list(e.absolute_path)
        if e.validator == "required":
            name = e.message.split("'")[1]
            out.append((pointer(base + [name]), "missing_required"))
        elif e.validator == "additionalProperties":
            extra = sorted(set(e.instance) - set(e.schema.get("properties", {})))
            out += [(pointer(base + [k]), "unknown_field") for k in extra]
        else:
            out.append((pointer(base), KIND[e.validator]))
    # a type failure hides every other failure at the same node
    typed = {p for p, k in out if k == "bad_type"}
    out = [(p, k) for p, k in out if k == "bad_type" or p not in typed]
    return sorted(set(out))


def nodes(v, path=()):
    yield path, v
    if isinstance(v, dict):
        for k, c in v.items():
            yield from nodes(c, path + (k,))
    elif isinstance(v, list):
        for i, c in enumerate(v):
            yield from nodes(c, path + (i,))


def get(doc, path):
    for p in path:
        doc = doc[p]
    return doc


def mutations(doc):
    for path, v in nodes(doc):
        parent = path[:-1]
        if path and isinstance(path[-1], str):
            yield "delete", path, None
        if isinstance(v, dict):
            yield "add", path + ("x_unlisted",), 1
        if isinstance(v, str):
            yield "set", path, "zz-not-a-member"
            yield "set", path, ""
        if isinstance(v, bool):
            yield "set", path, "true"
        elif isinstance(v, int):
            yield "set", path, -1
            yield "set", path, 1.5
        if isinstance(v, list) and v:
            yield "set", path, v + [v[0]]
        if path:
            yield "set", path, None
            yield "set", path, 7


def apply(doc, op, path, value):
    d = copy.deepcopy(doc)
    target = get(d, path[:-1])
    if op == "delete":
        del target[path[-1]]
    else:
        target[path[-1]] = value
    return d


cases = []
for name in ["golden_s7", "full"]:
    doc = json.load(open(os.path.join(CORE, "fixtures/golden", name + ".json")))
    assert expected(doc) == [], name
    for op, path, value in mutations(doc):
        cases.append(
            {
                "base": name,
                "op": op,
                "path": pointer(path),
                "value": value,
                "expected": [{"path": p, "kind": k} for p, k in expected(apply(doc, op, path, value))],
            }
        )

with open(os.path.join(HERE, "mutations.json"), "w") as f:
    json.dump(cases, f, indent=1)
    f.write("\n")
print(len(cases), "cases")
