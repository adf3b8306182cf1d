"""Regenerates fixtures/golden/*.canonical.json: compact JSON with known
fields in schema declaration order and free-form objects sorted by key.

    python3 fixtures/oracle/canonical.py
"""
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
CORE = os.path.dirname(os.path.dirname(HERE))
schema = json.load(open(os.path.join(CORE, "src/receipt/schema.v0.1.json")))


def resolve(s):
    if s and "$ref" in s:
        return schema["$defs"][s["$ref"].split("/")[-1]]
    return s


def order(v, s):
    s = resolve(s)
    if isinstance(v, dict):
        if s and "properties" in s:
            props = s["properties"]
            return {k: order(v[k], props[k]) for k in props if k in v}
        return {k: order(v[k], None) for k in sorted(v)}
    if isinstance(v, list):
        return [order(x, s.get("items") if s else None) for x in v]
    return v


for name in ["golden_s7", "full"]:
    doc = json.load(open(os.path.join(CORE, "fixtures/golden", name + ".json")))
    out = json.dumps(order(doc, schema), separators=(",", ":"), ensure_ascii=False)
    with open(os.path.join(CORE, "fixtures/golden", name + ".canonical.json"), "w") as f:
        f.write(out)
