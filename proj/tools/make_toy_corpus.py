#!/usr/bin/env python3
"""Writes the bundled toy corpus under data/toy/.

Twelve result tables whose winner cells name people described in forty
passages. Multi-hop questions ask for a fact that only the linked passage
holds; two single-hop questions are answered by a table cell. Gold chunk ids
and link spans are computed with the same flattening and chunking rules the
library uses.
"""

import json
import random
import sys
from pathlib import Path

SEP = " || "
CELL = ", "
BUDGET = 100

TABLES = [
    ("harbor-marathon", "Harbor City Marathon winners", ["Year", "Winner", "Club", "Venue", "Notes"]),
    ("northern-cup", "Northern Cup road cycling champions", ["Season", "Champion", "Team", "Finish", "Notes"]),
    ("lake-regatta", "Lake Varna rowing regatta results", ["Year", "Stroke", "Crew", "Course", "Notes"]),
    ("alpine-chess", "Alpine Open chess tournament winners", ["Edition", "Winner", "Federation", "Host", "Notes"]),
    ("coastal-triathlon", "Coastal Triathlon series champions", ["Year", "Champion", "Squad", "Venue", "Notes"]),
    ("valley-piano", "Valley Piano Competition laureates", ["Year", "Laureate", "Conservatory", "Hall", "Notes"]),
    ("summit-climb", "Summit Hill climb records", ["Year", "Climber", "Club", "Route", "Notes"]),
    ("river-sprint", "River Sprint canoe finals", ["Year", "Paddler", "Club", "Basin", "Notes"]),
    ("plains-rally", "Plains Rally drivers standings", ["Season", "Driver", "Team", "Stage", "Notes"]),
    ("forest-orienteering", "Forest Orienteering Cup winners", ["Year", "Runner", "Club", "Forest", "Notes"]),
    ("island-sailing", "Island Sailing Trophy skippers", ["Year", "Skipper", "Yacht Club", "Harbour", "Notes"]),
    ("desert-ultra", "Desert Ultra race champions", ["Year", "Champion", "Club", "Oasis", "Notes"]),
]

FIRST = ["Marco", "Ilse", "Tomas", "Anouk", "Keiko", "Rafael", "Oona", "Dmitri", "Lena", "Jorge",
         "Signe", "Pavel", "Amara", "Henrik", "Yusra", "Bruno", "Freya", "Casimir", "Noor", "Emil",
         "Zofia", "Idris", "Mireille", "Osvald", "Talia", "Anders", "Sabine", "Kofi", "Greta", "Lucio",
         "Hana", "Vikram", "Elodie", "Stellan", "Ines", "Matteo", "Rhea", "Bogdan", "Liesel", "Teodor"]
LAST = ["Velti", "Brandauer", "Okonkwo", "Hallström", "Marchetti", "Quevedo", "Lindqvist", "Sorokin",
        "Achterberg", "Villalobos", "Nakamura", "Ferreira", "Castellano", "Wojcik", "Eriksen", "Haddad",
        "Rautio", "Novak", "Delacroix", "Tamm", "Benedek", "Aaltonen", "Ruiz", "Kovacs", "Moreau",
        "Steiner", "Petrov", "Lindgren", "Mensah", "Ortega", "Takeda", "Rossi", "Duval", "Berg",
        "Almeida", "Horvath", "Sato", "Nilsen", "Ivanova", "Keller"]
UNLISTED = ["Aurelio Banfi", "Britt Sandvik", "Cyril Mattei", "Dagny Holm", "Egon Rainer", "Fiona Gale",
            "Gideon Ashe", "Halina Borowska"]
# Answers: each birthplace and alma mater occurs only in its own passage.
TOWNS = ["Orvieto", "Kaunas", "Enugu", "Sundsvall", "Bergamo", "Oviedo", "Umea", "Vologda", "Leeuwarden",
         "Tarragona", "Sendai", "Braga", "Zaragoza", "Lublin", "Aarhus", "Byblos", "Kuopio", "Brno",
         "Annecy", "Tartu", "Szeged", "Oulu", "Cadiz", "Debrecen", "Nantes", "Graz", "Kazan", "Malmo",
         "Kumasi", "Merida", "Nara", "Parma", "Rennes", "Bodo", "Evora", "Pecs", "Kyoto", "Trondheim",
         "Tomsk", "Basel"]
SCHOOLS = ["Brightwater College", "Eastmere Institute", "Kingsford Academy", "Highmoor University",
           "Redfern Polytechnic", "Ashcombe College", "Thornbury Institute", "Willowbrook University",
           "Greystone Academy", "Larkspur College", "Oakhaven Institute", "Fennwick University",
           "Marlow Polytechnic", "Ravensworth College", "Stonebridge Institute", "Elmstead University",
           "Coldwater Academy", "Harrowgate College", "Pinecrest Institute", "Norwood University",
           "Ambergate Polytechnic", "Brackenfield College", "Silverdale Institute", "Westholme University",
           "Foxley Academy", "Glenmoor College", "Hollins Institute", "Kestrel University",
           "Lindenmoor Polytechnic", "Mistral College", "Northcliff Institute", "Oldbury University",
           "Primrose Academy", "Quarrymoor College", "Rosewood Institute", "Saltmarsh University",
           "Tidewater Polytechnic", "Underhill College", "Vinewood Institute", "Yarrow University"]
NATIONS = ["Italian", "Austrian", "Nigerian", "Swedish", "Spanish", "Finnish", "Russian", "Dutch",
           "Japanese", "Portuguese", "Polish", "Danish", "Lebanese", "Czech", "French", "Estonian",
           "Hungarian", "Norwegian", "Ghanaian", "Mexican"]
PROFESSIONS = ["schoolteacher", "civil engineer", "veterinarian", "architect", "journalist", "pharmacist",
               "geologist", "carpenter", "translator", "surveyor"]
HOBBIES = ["restores old clocks", "keeps bees", "collects vintage maps", "paints watercolours",
           "plays the cello", "grows orchids", "writes detective novels", "builds model ships",
           "breeds carrier pigeons", "brews cider"]
CLUBS = ["Northgate", "Riverside", "Hillcrest", "Seaview", "Oakfield", "Stonegate", "Meadowbank",
         "Ironworks", "Lakeshore", "Kingsbridge", "Redcliff", "Westfield", "Eastwood", "Fairhaven",
         "Greenhill", "Brookside", "Ashford", "Highgate", "Marshfield", "Sandown"]
PLACES = ["Old Harbor", "North Quay", "Pine Ridge", "East Bank", "Mill Lane", "Castle Park", "South Pier",
          "Lighthouse Point", "Market Square", "Upper Meadow", "Cedar Gap", "Stone Bridge"]
NOTES = ["won after a late sprint along the final straight",
         "finished clear of the field despite heavy rain",
         "set a course record that stood for several seasons",
         "recovered from an early fall to take the title",
         "defended the title after a close contest",
         "shared the lead until the last section of the course",
         "took a first major title in front of a home crowd",
         "finished strongly after a cautious opening half"]

# (person index, kind, cue): kind "town" asks for the birthplace, "school" for
# the alma mater. cue "table" names the event and year, "year" only the year,
# "none" neither, so the table has to be reached through the passage.
MULTI_HOP = [
    (1, "town", "table"), (6, "school", "none"), (12, "town", "year"), (17, "school", "none"),
    (22, "town", "table"), (27, "school", "none"), (33, "town", "year"), (38, "school", "none"),
]
# (person index) whose club the single-hop question asks for.
SINGLE_HOP = [9, 30]


def flatten_prefix(title, header):
    return title + (SEP + CELL.join(header) if header else "")


def row_segment(row):
    return SEP + CELL.join(row)


def cell_token_ranges(text, cells):
    """cells: list of (byte_begin, byte_end). Returns [token_begin, token_end)."""
    spans = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < len(text) and not text[j].isspace():
            j += 1
        spans.append(i)
        i = j
    out = []
    t = 0
    for b, e in cells:
        while t < len(spans) and spans[t] < b:
            t += 1
        s = t
        while t < len(spans) and spans[t] < e:
            t += 1
        out.append((s, t))
    return out


def chunk_table(table):
    tid, title, header, rows = table["id"], table["title"], table["header"], table["rows"]
    prefix = flatten_prefix(title, header)
    prefix_tokens = len(prefix.split())
    groups = []
    words = prefix_tokens
    for r, row in enumerate(rows):
        rw = len(row_segment(row).split())
        if groups and words + rw <= BUDGET:
            groups[-1][1] = r
            words += rw
            continue
        groups.append([r, r])
        words = prefix_tokens + rw
    chunks = []
    for k, (first, last) in enumerate(groups):
        text = prefix
        cells = []
        for r in range(first, last + 1):
            text += SEP
            for c, value in enumerate(rows[r]):
                if c:
                    text += CELL
                cells.append((r, c, len(text), len(text) + len(value)))
                text += value
        ranges = cell_token_ranges(text, [(b, e) for _, _, b, e in cells])
        cell_tokens = {(r, c): rng for (r, c, _, _), rng in zip(cells, ranges)}
        chunks.append({"chunk_id": f"{tid}#{k}", "first": first, "last": last, "text": text,
                       "cells": cell_tokens})
    return chunks


def build(seed):
    rng = random.Random(seed)
    people = []
    for i in range(40):
        people.append({
            "id": f"p{i:02d}",
            "name": f"{FIRST[i]} {LAST[i]}",
            "last": LAST[i],
            "born": 1950 + (i * 7) % 40,
            "nation": NATIONS[i % len(NATIONS)],
            "profession": PROFESSIONS[(i * 3) % len(PROFESSIONS)],
            "town": TOWNS[i],
            "school": SCHOOLS[i],
            "hobby": HOBBIES[(i * 7) % len(HOBBIES)],
        })

    passages = []
    for p in people:
        text = (f"{p['name']} (born {p['born']}) is a {p['nation']} {p['profession']} and amateur athlete "
                f"who was born in {p['town']}. {p['last']} studied at {p['school']} before settling "
                f"near the coast, and in spare time {p['last']} {p['hobby']}.")
        passages.append({"id": p["id"], "title": p["name"], "text": text})

    # Four rows per table: the forty passage subjects plus eight winners
    # without a passage, shuffled so table membership is not alphabetical.
    order = list(range(40)) + [-(i + 1) for i in range(len(UNLISTED))]
    rng.shuffle(order)
    tables = []
    where = {}
    club_pool = list(CLUBS)
    for t, (tid, title, header) in enumerate(TABLES):
        members = order[4 * t:4 * t + 4]
        rows = []
        year = 1980 + t
        for r, pi in enumerate(members):
            name = people[pi]["name"] if pi >= 0 else UNLISTED[-pi - 1]
            club = f"{club_pool[(t * 5 + r) % len(club_pool)]} {header[2].split()[-1]}"
            note_a = NOTES[(t + r) % len(NOTES)]
            note_b = NOTES[(t + 3 * r + 1) % len(NOTES)]
            note_c = NOTES[(2 * t + r + 5) % len(NOTES)]
            rows.append([str(year + 2 * r), name, club, PLACES[(t + r) % len(PLACES)],
                         f"{note_a}, then {note_b}, and later {note_c}"])
            if pi >= 0:
                where[pi] = (tid, r)
        tables.append({"id": tid, "title": title, "header": header, "rows": rows})

    chunks = {t["id"]: chunk_table(t) for t in tables}
    table_by_id = {t["id"]: t for t in tables}

    def gold_for(pi):
        tid, r = where[pi]
        for ch in chunks[tid]:
            if ch["first"] <= r <= ch["last"]:
                b, e = ch["cells"][(r, 1)]
                return ch["chunk_id"], {"chunk_id": ch["chunk_id"], "start": b, "end": e - 1,
                                        "passage_id": people[pi]["id"]}
        raise AssertionError("row not chunked")

    gold = []
    for n, (pi, kind, cue) in enumerate(MULTI_HOP):
        p = people[pi]
        tid, r = where[pi]
        table = table_by_id[tid]
        year = table["rows"][r][0]
        event = table["title"].split()[0] + " " + table["title"].split()[1]
        who = f"the {p['nation']} {p['profession']} who {p['hobby']}"
        tail = {"table": f", the {event} winner of {year}", "year": f", a winner in {year}", "none": ""}[cue]
        if kind == "town":
            q = f"In which town was {who} born{tail}?"
            answer = p["town"]
        else:
            q = f"Which school did {who} attend{tail}?"
            answer = p["school"]
        chunk_id, link = gold_for(pi)
        gold.append({"qid": f"q{n:02d}", "question": q, "answers": [answer], "gold_chunks": [chunk_id],
                     "gold_links": [link]})
    for m, pi in enumerate(SINGLE_HOP):
        p = people[pi]
        tid, r = where[pi]
        table = table_by_id[tid]
        q = f"Which club did {p['name']} represent when listed in the {table['title']}?"
        chunk_id, link = gold_for(pi)
        gold.append({"qid": f"q{len(MULTI_HOP) + m:02d}", "question": q, "answers": [table["rows"][r][2]],
                     "gold_chunks": [chunk_id], "gold_links": [link]})

    for g in gold:
        for a in g["answers"]:
            assert a.lower() not in g["question"].lower(), g
    for ts in chunks.values():
        assert len(ts) == 2, [c["chunk_id"] for c in ts]
    return passages, tables, gold


MULTI_TEMPLATES = [
    "Where was the {role} of the {event} born?",
    "Which university did the {role} of the {event} attend?",
    "In what town did the person who won the {event} grow up?",
    "What school did the {year} {event} {role} study at?",
    "Which city is the birthplace of the {role} who finished first in the {event}?",
    "Where did the {event} {role} from {year} go to college?",
    "In which town was the {nation} {profession} who {hobby} born?",
    "Which school did the {nation} {profession} who {hobby} attend, a {role} in {year}?",
    "In which town was the {nation} {profession} who {hobby} born, the {event} {role} of {year}?",
    "Which college did the {nation} {profession} who {hobby} attend?",
]
SINGLE_TEMPLATES = [
    "Which {org} did {name} represent in the {event}?",
    "In what year did {name} win the {event}?",
    "Which {org} finished first in the {event} of {year}?",
    "What venue hosted the {event} in {year}?",
    "How many titles did {org} take at the {event}?",
    "Which {org} was listed for {name} in the {event} results?",
    "Which {org} did {name} represent when listed in the {event} results?",
    "Which {org} did {name} race for in {year}?",
]
R_NATIONS = ["Belgian", "Chilean", "Kenyan", "Irish", "Greek", "Latvian", "Turkish", "Peruvian"]
R_PROFESSIONS = ["nurse", "electrician", "botanist", "librarian", "chemist", "plumber", "historian"]
R_HOBBIES = ["sings in a choir", "repairs bicycles", "knits scarves", "photographs birds", "bakes bread",
             "carves wood"]
ROLES = ["winner", "champion", "laureate", "skipper", "driver", "runner", "paddler", "climber"]
ORGS = ["club", "team", "crew", "federation", "squad", "conservatory"]
EVENTS = ["Spring Open", "Harbor Relay", "Valley Cup", "Metro Classic", "Autumn Trophy", "Island Games",
          "Winter Derby", "Capital Marathon", "River Festival", "Coast Challenge"]
NAMES = ["Aino Lehto", "Bram de Wit", "Chiara Conti", "Dario Mele", "Elif Kaya", "Felix Hahn",
         "Gunnar Lie", "Hugo Blanc", "Iris Vogel", "Jonas Falk"]


def route_examples(rng, n):
    out = []
    for i in range(n):
        multi = i % 2 == 0
        tmpl = rng.choice(MULTI_TEMPLATES if multi else SINGLE_TEMPLATES)
        q = tmpl.format(role=rng.choice(ROLES), event=rng.choice(EVENTS), year=rng.randint(1970, 2020),
                        org=rng.choice(ORGS), name=rng.choice(NAMES), nation=rng.choice(R_NATIONS),
                        profession=rng.choice(R_PROFESSIONS), hobby=rng.choice(R_HOBBIES))
        out.append({"question": q, "label": "multi-hop" if multi else "single-hop"})
    return out


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "toy"
    out.mkdir(parents=True, exist_ok=True)
    passages, tables, gold = build(seed=7)
    write_jsonl(out / "passages.jsonl", passages)
    write_jsonl(out / "tables.jsonl", tables)
    write_jsonl(out / "gold.jsonl", gold)
    rng = random.Random(11)
    write_jsonl(out / "route_train.jsonl", route_examples(rng, 80))
    write_jsonl(out / "route_dev.jsonl", route_examples(rng, 40))


if __name__ == "__main__":
    main()
