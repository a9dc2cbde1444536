#!/usr/bin/env python3
"""Regenerates the bundled data files and recorded source responses.

Outputs (paths relative to the repository root):
  data/case_study_snapshot.json   threat library snapshot for the built-in kinds
  data/case_study_scope.json      five-component case-study scope
  data/cwe_catalog.json           CWE titles and mitigation guidance
  tests/fixtures/nvd/plc_search_pages.json   keyword search pages for "PLC"
  tests/fixtures/nvd/plc_details.json        per-CVE detail documents for "PLC"

The CVE identifiers are placeholders. Per-keyword aggregates (threat counts,
rankings, CVE totals) are constructed to match the reference case study; they
are not a capture of live data. Output is deterministic.
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]
STAMP = "2024-06-01T00:00:00Z"
NOTE = ("Synthetic case-study library. CVE identifiers are placeholders; per-keyword "
        "aggregates reproduce the reference case-study threat counts and top-5 rankings.")

# ---------------------------------------------------------------------------
# CWE catalog
# ---------------------------------------------------------------------------

TITLES = {
    16: "Configuration",
    20: "Improper Input Validation",
    22: "Improper Limitation of a Pathname to a Restricted Directory ('Path Traversal')",
    23: "Relative Path Traversal",
    59: "Improper Link Resolution Before File Access ('Link Following')",
    73: "External Control of File Name or Path",
    74: "Improper Neutralization of Special Elements in Output Used by a Downstream Component ('Injection')",
    77: "Improper Neutralization of Special Elements used in a Command ('Command Injection')",
    78: "Improper Neutralization of Special Elements used in an OS Command ('OS Command Injection')",
    79: "Improper Neutralization of Input During Web Page Generation ('Cross-site Scripting')",
    88: "Improper Neutralization of Argument Delimiters in a Command ('Argument Injection')",
    89: "Improper Neutralization of Special Elements used in an SQL Command ('SQL Injection')",
    91: "XML Injection (aka Blind XPath Injection)",
    94: "Improper Control of Generation of Code ('Code Injection')",
    113: "Improper Neutralization of CRLF Sequences in HTTP Headers ('HTTP Request/Response Splitting')",
    116: "Improper Encoding or Escaping of Output",
    119: "Improper Restriction of Operations within the Bounds of a Memory Buffer",
    120: "Buffer Copy without Checking Size of Input ('Classic Buffer Overflow')",
    121: "Stack-based Buffer Overflow",
    122: "Heap-based Buffer Overflow",
    125: "Out-of-bounds Read",
    129: "Improper Validation of Array Index",
    134: "Use of Externally-Controlled Format String",
    189: "Numeric Errors",
    190: "Integer Overflow or Wraparound",
    191: "Integer Underflow (Wrap or Wraparound)",
    200: "Exposure of Sensitive Information to an Unauthorized Actor",
    201: "Insertion of Sensitive Information Into Sent Data",
    203: "Observable Discrepancy",
    209: "Generation of Error Message Containing Sensitive Information",
    250: "Execution with Unnecessary Privileges",
    254: "7PK - Security Features",
    255: "Credentials Management Errors",
    259: "Use of Hard-coded Password",
    264: "Permissions, Privileges, and Access Controls",
    269: "Improper Privilege Management",
    276: "Incorrect Default Permissions",
    284: "Improper Access Control",
    285: "Improper Authorization",
    287: "Improper Authentication",
    290: "Authentication Bypass by Spoofing",
    294: "Authentication Bypass by Capture-replay",
    295: "Improper Certificate Validation",
    306: "Missing Authentication for Critical Function",
    307: "Improper Restriction of Excessive Authentication Attempts",
    310: "Cryptographic Issues",
    311: "Missing Encryption of Sensitive Data",
    312: "Cleartext Storage of Sensitive Information",
    319: "Cleartext Transmission of Sensitive Information",
    321: "Use of Hard-coded Cryptographic Key",
    326: "Inadequate Encryption Strength",
    327: "Use of a Broken or Risky Cryptographic Algorithm",
    330: "Use of Insufficiently Random Values",
    345: "Insufficient Verification of Data Authenticity",
    347: "Improper Verification of Cryptographic Signature",
    352: "Cross-Site Request Forgery (CSRF)",
    353: "Missing Support for Integrity Check",
    362: "Concurrent Execution using Shared Resource with Improper Synchronization ('Race Condition')",
    369: "Divide By Zero",
    384: "Session Fixation",
    399: "Resource Management Errors",
    400: "Uncontrolled Resource Consumption",
    401: "Missing Release of Memory after Effective Lifetime",
    404: "Improper Resource Shutdown or Release",
    415: "Double Free",
    416: "Use After Free",
    425: "Direct Request ('Forced Browsing')",
    426: "Untrusted Search Path",
    427: "Uncontrolled Search Path Element",
    428: "Unquoted Search Path or Element",
    434: "Unrestricted Upload of File with Dangerous Type",
    476: "NULL Pointer Dereference",
    494: "Download of Code Without Integrity Check",
    502: "Deserialization of Untrusted Data",
    521: "Weak Password Requirements",
    522: "Insufficiently Protected Credentials",
    532: "Insertion of Sensitive Information into Log File",
    552: "Files or Directories Accessible to External Parties",
    601: "URL Redirection to Untrusted Site ('Open Redirect')",
    611: "Improper Restriction of XML External Entity Reference",
    613: "Insufficient Session Expiration",
    617: "Reachable Assertion",
    639: "Authorization Bypass Through User-Controlled Key",
    662: "Improper Synchronization",
    665: "Improper Initialization",
    668: "Exposure of Resource to Wrong Sphere",
    672: "Operation on a Resource after Expiration or Release",
    676: "Use of Potentially Dangerous Function",
    681: "Incorrect Conversion between Numeric Types",
    693: "Protection Mechanism Failure",
    703: "Improper Check or Handling of Exceptional Conditions",
    732: "Incorrect Permission Assignment for Critical Resource",
    754: "Improper Check for Unusual or Exceptional Conditions",
    755: "Improper Handling of Exceptional Conditions",
    770: "Allocation of Resources Without Limits or Throttling",
    772: "Missing Release of Resource after Effective Lifetime",
    787: "Out-of-bounds Write",
    798: "Use of Hard-coded Credentials",
    822: "Untrusted Pointer Dereference",
    835: "Loop with Unreachable Exit Condition ('Infinite Loop')",
    862: "Missing Authorization",
    863: "Incorrect Authorization",
    908: "Use of Uninitialized Resource",
    912: "Hidden Functionality",
    918: "Server-Side Request Forgery (SSRF)",
    1021: "Improper Restriction of Rendered UI Layers or Frames",
    1236: "Improper Neutralization of Formula Elements in a CSV File",
}

GUIDANCE = {
    "memory": [
        "Use a memory-safe language or vetted library routines that perform bounds checking.",
        "Validate every length, index and offset against the destination buffer before copying or indexing.",
        "Build with compiler and platform hardening (stack protection, ASLR, DEP/NX, fortified sources).",
    ],
    "injection": [
        "Treat all external input as untrusted; validate it against a strict allow-list of expected values.",
        "Neutralize or encode special elements for the downstream interpreter, or use structured APIs that separate data from code.",
        "Run the interpreter or command with the least privilege required.",
    ],
    "path": [
        "Canonicalize paths and verify the result stays inside the intended directory.",
        "Map user requests to server-side identifiers instead of accepting file names directly.",
    ],
    "authn": [
        "Require authentication for every function and interface that changes state or exposes data.",
        "Use a well-tested authentication framework rather than custom logic; protect against replay with nonces or timestamps.",
        "Enforce lockout or rate limiting on repeated authentication failures.",
    ],
    "credentials": [
        "Remove hard-coded credentials and keys; provision unique secrets per device at commissioning.",
        "Store credentials with strong, salted, adaptive hashing or in a protected key store.",
        "Force a credential change on first use and support rotation.",
    ],
    "authz": [
        "Enforce authorization checks server-side for every request, based on the authenticated role.",
        "Apply least privilege to processes, files and default permissions.",
        "Deny by default; review access-control lists for critical resources.",
    ],
    "crypto": [
        "Protect data in transit and at rest with current, vetted algorithms and adequate key lengths.",
        "Verify signatures, certificates and integrity checks before trusting code, firmware or data.",
        "Use a cryptographically secure random number generator for keys, nonces and tokens.",
    ],
    "exposure": [
        "Return generic error messages and keep diagnostic detail in protected logs.",
        "Classify sensitive data and strip it from responses, logs and broadcast traffic.",
    ],
    "resource": [
        "Bound memory, connections, threads and request rates per client.",
        "Release every acquired resource on all paths, including error paths.",
        "Guard shared state with correct synchronization and test under concurrent load.",
    ],
    "errors": [
        "Check return values and handle exceptional conditions explicitly.",
        "Fail to a safe state on unexpected input or internal errors.",
    ],
    "web": [
        "Use anti-CSRF tokens and SameSite cookies for state-changing requests.",
        "Regenerate session identifiers on login and expire idle sessions.",
        "Restrict redirects, framing and server-side fetches to an allow-list of destinations.",
    ],
    "general": [
        "Harden configuration against a documented secure baseline and remove unused features.",
        "Track vendor advisories and apply firmware and software updates promptly.",
    ],
}

CATEGORY = {}
for ids, cat in [
    ((119, 120, 121, 122, 125, 129, 134, 189, 190, 191, 369, 415, 416, 476, 617, 665, 681, 787, 822, 908, 401), "memory"),
    ((20, 74, 77, 78, 79, 88, 89, 91, 94, 113, 116, 434, 502, 611, 1236), "injection"),
    ((22, 23, 59, 73, 426, 427, 428), "path"),
    ((287, 290, 294, 306, 307, 521), "authn"),
    ((255, 259, 321, 522, 798), "credentials"),
    ((250, 264, 269, 276, 284, 285, 425, 552, 639, 668, 732, 862, 863, 912), "authz"),
    ((295, 310, 311, 312, 319, 326, 327, 330, 345, 347, 353, 494), "crypto"),
    ((200, 201, 203, 209, 532), "exposure"),
    ((362, 399, 400, 404, 662, 672, 770, 772, 835), "resource"),
    ((703, 754, 755), "errors"),
    ((352, 384, 601, 613, 918, 1021), "web"),
    ((16, 254, 676, 693), "general"),
]:
    for i in ids:
        CATEGORY[i] = cat
assert set(CATEGORY) == set(TITLES), set(TITLES) ^ set(CATEGORY)


def catalog():
    return {f"CWE-{n}": {"title": TITLES[n], "mitigations": GUIDANCE[CATEGORY[n]]} for n in sorted(TITLES)}


# ---------------------------------------------------------------------------
# Component corpora
# ---------------------------------------------------------------------------

# The 60 PLC weaknesses, in the order the reference case study lists them.
PLC_CWES = [121, 125, 384, 294, 319, 312, 703, 676, 798, 306, 404, 494, 326, 416, 415, 284, 552, 347, 345,
            434, 22, 425, 400, 522, 532, 787, 401, 672, 287, 427, 23, 755, 770, 20, 863, 94, 476, 119, 665,
            120, 754, 307, 77, 862, 668, 201, 352, 290, 78, 353, 79, 200, 327, 662, 255, 254, 399, 16, 310, 295]
assert len(PLC_CWES) == 60 == len(set(PLC_CWES))

POOL = sorted(TITLES)


def tail_counts(n, start, ratio):
    return [max(1, round(start * ratio ** i)) for i in range(n)]


def keyword_fixture(keyword, prefix, top, tail_n, tail_max, ratio, total, doubles, seed, tail=None):
    """top: [(cwe, count)] in ranked order; tail counts stay below the fifth count."""
    if tail is None:
        rng = random.Random(seed)
        tail = rng.sample([c for c in POOL if c not in dict(top)], tail_n)
    counts = list(top) + list(zip(tail, tail_counts(len(tail), tail_max, ratio)))
    return dict(keyword=keyword, prefix=prefix, counts=counts, total=total, doubles=doubles)


PLC_TOP = [(119, 19), (287, 17), (400, 12), (306, 11), (20, 10)]
PLC_TAIL = [c for c in PLC_CWES if c not in dict(PLC_TOP)]
PLC_TAIL_COUNTS = [8, 7, 6, 6, 5, 5, 4, 4, 4, 4] + [3] * 12 + [2] * 15 + [1] * 18

COMPONENTS = [
    dict(keyword="PLC", prefix=70000, counts=PLC_TOP + list(zip(PLC_TAIL, PLC_TAIL_COUNTS)), total=213, doubles=7),
    keyword_fixture("RTU", 71000, [(798, 9), (22, 8), (287, 8), (754, 7), (200, 6)], 24, 5, 0.85, 90, 2, 11),
    keyword_fixture("SCADA", 72000, [(119, 80), (200, 70), (20, 64), (22, 60), (79, 52)], 63, 45, 0.93, 1210, 40, 12),
    keyword_fixture("sensor", 73000, [(787, 14), (22, 12), (20, 11), (264, 9), (77, 8)], 43, 7, 0.93, 160, 6, 13),
    keyword_fixture("actuator", 74000, [(22, 7), (200, 6), (862, 5), (94, 4), (732, 3)], 6, 2, 0.75, 40, 1, 14),
    keyword_fixture("HMI", 75000, [(79, 24), (20, 21), (287, 18), (22, 15), (352, 13)], 30, 11, 0.9, 300, 10, 15),
    keyword_fixture("IED", 76000, [(20, 12), (400, 10), (287, 9), (798, 8), (319, 7)], 20, 6, 0.88, 110, 4, 16),
]

# Longer search phrases return a subset of the short keyword's mapped CVEs.
SUBSET_KEYWORDS = {
    "programmable logic controller": ("PLC", 40),
    "remote terminal unit": ("RTU", 20),
    "human machine interface": ("HMI", 30),
    "intelligent electronic device": ("IED", 15),
}


def cve_id(prefix, i):
    return f"CVE-{2008 + i % 16}-{prefix + i}"


def build_corpus(c):
    """Returns (records, unmapped_ids). records: [(cve_id, [cwe...])] for mapped CVEs."""
    counts = c["counts"]
    pairs_total = sum(n for _, n in counts)
    mapped = pairs_total - c["doubles"]
    unmapped = c["total"] - mapped
    top_fifth = counts[4][1]
    assert all(n < top_fifth for _, n in counts[5:]), c["keyword"]
    assert mapped <= pairs_total <= c["total"], (c["keyword"], mapped, pairs_total)
    assert max(n for _, n in counts) <= mapped
    assert unmapped >= 0

    ids = [cve_id(c["prefix"], i) for i in range(c["total"])]
    mapped_ids, unmapped_ids = ids[:mapped], ids[mapped:]
    slots = [cwe for cwe, n in counts for _ in range(n)]
    records = {cid: [] for cid in mapped_ids}
    for i, cwe in enumerate(slots):
        records[mapped_ids[i % mapped]].append(cwe)
    for cid, cwes in records.items():
        assert cwes and len(cwes) == len(set(cwes)), cid
    return records, unmapped_ids


def sort_key(cid):
    _, year, seq = cid.split("-")
    return int(year), int(seq)


def snapshot(corpora):
    entries = {}
    for c in COMPONENTS:
        records, unmapped = corpora[c["keyword"]]
        pairs = sorted(((cid, cwe) for cid, cwes in records.items() for cwe in cwes),
                       key=lambda p: (sort_key(p[0]), p[1]))
        entries[c["keyword"]] = {
            "pairs": [{"cve": cid, "cwe": f"CWE-{cwe}"} for cid, cwe in pairs],
            "unmapped_count": len(unmapped),
        }
    for keyword, (base, n) in SUBSET_KEYWORDS.items():
        records, _ = corpora[base]
        chosen = sorted(records, key=sort_key)[:n]
        pairs = sorted(((cid, cwe) for cid in chosen for cwe in records[cid]), key=lambda p: (sort_key(p[0]), p[1]))
        entries[keyword] = {"pairs": [{"cve": cid, "cwe": f"CWE-{cwe}"} for cid, cwe in pairs], "unmapped_count": 0}
    return {"format_version": 1, "fetched_at": STAMP, "source_note": NOTE, "entries": entries}


def scope():
    components = []
    for i, (kind, keywords) in enumerate([
        ("PLC", ["PLC", "programmable logic controller"]),
        ("RTU", ["RTU", "remote terminal unit"]),
        ("SCADA", ["SCADA"]),
        ("Sensor", ["sensor"]),
        ("Actuator", ["actuator"]),
    ]):
        components.append({"id": f"c{i + 1}", "kind": kind, "label": kind, "keywords": keywords})
    return {"name": "case-study SCADA network", "created": STAMP, "components": components}


# ---------------------------------------------------------------------------
# Recorded source responses (NVD CVE API 2.0 document shape)
# ---------------------------------------------------------------------------

def nvd_doc(vulns, start=0, total=None, per_page=None):
    return {
        "resultsPerPage": per_page if per_page is not None else len(vulns),
        "startIndex": start,
        "totalResults": total if total is not None else len(vulns),
        "format": "NVD_CVE",
        "version": "2.0",
        "timestamp": "2024-06-01T00:00:00.000",
        "vulnerabilities": [{"cve": v} for v in vulns],
    }


def nvd_cve(cid, weaknesses, index, keyword):
    year = sort_key(cid)[0]
    cve = {
        "id": cid,
        "sourceIdentifier": "ics-cert@hq.dhs.gov",
        "published": f"{year}-{1 + index % 12:02d}-{1 + index % 28:02d}T12:00:00.000",
        "lastModified": "2024-05-01T00:00:00.000",
        "vulnStatus": "Analyzed",
        "descriptions": [
            {"lang": "en", "value": f"Placeholder {keyword} vulnerability record {index} used as a recorded fixture."},
            {"lang": "es", "value": f"Registro de vulnerabilidad {index}."},
        ],
        "metrics": {
            "cvssMetricV31": [{
                "source": "nvd@nist.gov",
                "type": "Primary",
                "cvssData": {"version": "3.1", "baseScore": round(4.0 + (index % 60) / 10.0, 1),
                             "baseSeverity": "MEDIUM"},
            }]
        },
        "references": [],
    }
    if weaknesses is not None:
        cve["weaknesses"] = weaknesses
    return cve


def weakness_block(source, kind, values):
    return {"source": source, "type": kind, "description": [{"lang": "en", "value": v} for v in values]}


def recorded_plc(records, unmapped_ids):
    details = {}
    all_ids = sorted(list(records) + unmapped_ids, key=sort_key)
    for index, cid in enumerate(all_ids):
        if cid in records:
            cwes = [f"CWE-{n}" for n in records[cid]]
            blocks = [weakness_block("nvd@nist.gov", "Primary", cwes[:1])]
            if len(cwes) > 1:
                blocks.append(weakness_block("ics-cert@hq.dhs.gov", "Secondary", cwes[1:]))
            if index % 9 == 0:
                # Same weakness reported by both sources; counts once.
                blocks.append(weakness_block("ics-cert@hq.dhs.gov", "Secondary", cwes[:1]))
            if index % 13 == 0:
                blocks.append(weakness_block("ics-cert@hq.dhs.gov", "Secondary", ["NVD-CWE-Other"]))
            weaknesses = blocks
        else:
            k = unmapped_ids.index(cid)
            weaknesses = (None if k % 3 == 2 else
                          [weakness_block("nvd@nist.gov", "Primary", ["NVD-CWE-noinfo" if k % 3 == 0 else "NVD-CWE-Other"])])
        details[cid] = nvd_doc([nvd_cve(cid, weaknesses, index, "PLC")])

    # Search results carry no weakness data; one id repeats across a page boundary.
    per_page = 60
    listing = list(all_ids)
    listing.insert(150, all_ids[10])
    pages = []
    for start in range(0, len(listing), per_page):
        chunk = listing[start:start + per_page]
        vulns = [{"id": cid, "sourceIdentifier": "ics-cert@hq.dhs.gov", "vulnStatus": "Analyzed"} for cid in chunk]
        pages.append(nvd_doc(vulns, start=start, total=len(listing), per_page=per_page))
    return pages, details


def dump(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def main():
    corpora = {c["keyword"]: build_corpus(c) for c in COMPONENTS}
    used = {cwe for c in COMPONENTS for cwe, _ in c["counts"]}
    assert used <= set(TITLES), used - set(TITLES)

    dump(ROOT / "data" / "cwe_catalog.json", catalog())
    dump(ROOT / "data" / "case_study_snapshot.json", snapshot(corpora))
    dump(ROOT / "data" / "case_study_scope.json", scope())

    pages, details = recorded_plc(*corpora["PLC"])
    dump(ROOT / "tests" / "fixtures" / "nvd" / "plc_search_pages.json", pages)
    dump(ROOT / "tests" / "fixtures" / "nvd" / "plc_details.json", details)

    for c in COMPONENTS:
        records, unmapped = corpora[c["keyword"]]
        print(f"{c['keyword']:>9}: {len(c['counts'])} CWEs, {len(records) + len(unmapped)} CVEs, "
              f"{len(unmapped)} unmapped, {sum(n for _, n in c['counts'])} pairs")


if __name__ == "__main__":
    main()
