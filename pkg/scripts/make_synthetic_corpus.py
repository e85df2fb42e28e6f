"""Regenerate data/synthetic_bgl.log, the bundled smoke-test corpus.

The file mimics the supercomputer RAS log layout the ingester expects:
nine whitespace-delimited header fields (alert tag, epoch seconds, date,
node, full timestamp, node again, subsystem, component, severity)
followed by free-form message content.  Lines with alert tag "-" are
normal; anything else is an alert.  The output is deterministic.
"""

from __future__ import annotations

import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "synthetic_bgl.log"

NORMAL_MESSAGES = [
    "instruction cache parity error corrected",
    "generating core.{n}",
    "CE sym {n}, at 0x{h}, mask 0x{m}",
    "total of {n} ddr error(s) detected and corrected",
    "{n} double-hummer alignment exceptions",
    "shutdown complete",
    "mmcs_server exited normally with exit code {n}",
    "program interrupt: fp cr field.............{n}",
    "node card status: no errors found",
    "monitor caught java.lang.IllegalStateException cleanly",
]

ALERT_MESSAGES = [
    ("KERNDTLB", "data TLB error interrupt"),
    ("KERNSTOR", "data storage interrupt"),
    ("APPREAD", "ciod: failed to read message prefix on control stream {n}"),
    ("KERNMNTF", "Lustre mount FAILED : bglio{n} : block_id : location"),
    ("KERNTERM", "rts: kernel terminated for reason {n}"),
    ("APPSEV", "ciod: Error loading program {n}: invalid or missing program image"),
    ("MASABNORM", "idoproxydb hit ASSERT condition: ASSERT expression={n}"),
]

NODES = [
    "R{:02d}-M{}-N{}-C:J{:02d}-U{:02d}".format(r, m, n, j, u)
    for r, m, n, j, u in [
        (2, 0, 4, 12, 11), (16, 1, 2, 9, 1), (21, 0, 7, 15, 21),
        (30, 1, 0, 3, 31), (5, 0, 9, 18, 41), (11, 1, 5, 6, 61),
    ]
]

MALFORMED = [
    "truncated line",
    "- notanumber 2005.06.03 R02 ts R02 RAS KERNEL INFO bad epoch field here",
    "- 1117840000 too few",
    "",
]


def render(template: str, rng: random.Random) -> str:
    return (
        template.replace("{n}", str(rng.randrange(1, 90000)))
        .replace("{h}", format(rng.randrange(2**24), "06x"))
        .replace("{m}", format(rng.randrange(2**8), "02x"))
    )


def main() -> None:
    rng = random.Random(20050603)
    epoch = 1117838570
    lines = []
    malformed_at = {137: 0, 402: 1, 760: 2, 901: 3}
    while len(lines) < 1000:
        i = len(lines)
        if i in malformed_at:
            lines.append(MALFORMED[malformed_at[i]])
            continue
        epoch += rng.randrange(0, 7)
        node = rng.choice(NODES)
        date = "2005.06.03"
        fulltime = f"2005-06-03-15.{(i // 60) % 60:02d}.{i % 60:02d}.{rng.randrange(10**6):06d}"
        if rng.random() < 0.08:
            tag, message = rng.choice(ALERT_MESSAGES)
            severity = "FATAL"
        else:
            tag, message = "-", rng.choice(NORMAL_MESSAGES)
            severity = "INFO"
        content = render(message, rng)
        lines.append(
            f"{tag} {epoch} {date} {node} {fulltime} {node} RAS KERNEL {severity} {content}"
        )
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")
    alerts = sum(1 for ln in lines if ln and not ln.startswith("- "))
    print(f"wrote {len(lines)} lines ({alerts} alerts) to {OUT}")


if __name__ == "__main__":
    main()
