"""Rendering of command results as text, JSON and CSV."""

import csv
import io
import json

SCHEMA_VERSION = 1


def dump_json(payload) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline.

    Re-serialising the parsed output with this function reproduces it byte for byte.
    """
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def envelope(command, config, result=None, error=None):
    out = {"schema": SCHEMA_VERSION, "command": command, "input": config.input_dict()}
    if error is not None:
        out["error"] = error
    else:
        out["result"] = result
    return out


def dump_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _table(header, rows):
    cols = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cols) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cols)


def text_conjugate(source, result):
    rows = [(f"{p['t']:.10f}", p["multiplicity"]) for p in result["points"]]
    lines = [f"conjugate instants along {source}", _table(["t", "m(t)"], rows)]
    state = "non-degenerate" if result["nondegenerate"] else (
        f"DEGENERATE: t = 1 is conjugate with multiplicity {result['endpoint_multiplicity']}"
    )
    lines.append(f"total {result['total']}, {state}")
    return "\n".join(lines) + "\n"


def text_index(source, result):
    return f"Morse index of the index form along {source}: {result['mu']}\n"


def text_crossings(source, result):
    rows = [
        (f"{c['lambda0']:.10f}", c["kernel_dim"], " ".join(f"{v:.6g}" for v in c["form_eigenvalues"]), c["signature"])
        for c in result["crossings"]
    ]
    lines = [
        f"crossings of lambda -> q_lambda along {source}",
        _table(["lambda0", "dim ker", "crossing form eigenvalues", "sgn"], rows),
        f"signature sum {result['signature_sum']}; "
        f"matches conjugate instants: {'yes' if result['matched'] else 'NO'}",
    ]
    return "\n".join(lines) + "\n"


def text_verify(source, result):
    rows = [
        (f"{d['lambda0']:.10f}", d["multiplicity"], " ".join(f"{v:.8g}" for v in d["closed"]),
         " ".join(f"{v:.8g}" for v in d["fd"]))
        for d in result["crossings"]
    ]
    lines = [
        f"index theorem check along {source}",
        _table(["lambda0", "m", "closed form", "finite diff"], rows) if rows else "(no crossings)",
        f"Galerkin index {result['mu_galerkin']}, conjugate total {result['conjugate_total']}, "
        f"crossing signature sum {result['crossing_signature_sum']}: "
        + ("AGREE" if result["agree"] else "DISAGREE"),
    ]
    return "\n".join(lines) + "\n"


def text_suite(result):
    rows = []
    for t in result["trials"]:
        if "error" in t:
            rows.append((t["trial"], t["n"], "-", "-", "-", t["error"]["error"]))
        else:
            rows.append((t["trial"], t["n"], t["mu_galerkin"], t["conjugate_total"], t["crossing_signature_sum"],
                         "agree" if t["agree"] else "DISAGREE"))
    total = len(result["trials"])
    lines = [
        _table(["trial", "n", "mu", "conj", "sgn sum", "verdict"], rows),
        f"{result['agreeing']}/{total} trials agree; {result['redraws']} degenerate redraws "
        f"({100 * result['redraw_rate']:.1f}%); prng {result['prng']} seed {result['seed']}",
    ]
    return "\n".join(lines) + "\n"
