"""Regenerates the bundled data files under src/twentyq/data/.

The persona roster and the question bank are hand-curated here; the utterance
banks combine a curated head (including deliberately ambiguous hedges that
appear under more than one intent) with a deterministic combinatorial tail so
that the full bank reaches the target inventory of 508/445/251 unique
utterances for yes/no/unknown.

Run from the repo root:  python tools/gen_data.py
"""

import json
import pathlib
from collections import Counter

OUT = pathlib.Path(__file__).resolve().parent.parent / "src" / "twentyq" / "data"

# ---------------------------------------------------------------------------
# Persona roster: (slug, display name, birth year, birthplace, degree,
#                  gender, profession, nationality)
# ---------------------------------------------------------------------------

PEOPLE = [
    # scientists
    ("albert_einstein", "Albert Einstein", 1879, "germany", "phd", "male", "scientist", "usa"),
    ("isaac_newton", "Isaac Newton", 1643, "uk", "master", "male", "scientist", "uk"),
    ("marie_curie", "Marie Curie", 1867, "poland", "phd", "female", "scientist", "france"),
    ("charles_darwin", "Charles Darwin", 1809, "uk", "bachelor", "male", "scientist", "uk"),
    ("nikola_tesla", "Nikola Tesla", 1856, "serbia", "dropout", "male", "scientist", "usa"),
    ("stephen_hawking", "Stephen Hawking", 1942, "uk", "phd", "male", "scientist", "uk"),
    ("alan_turing", "Alan Turing", 1912, "uk", "phd", "male", "scientist", "uk"),
    ("richard_feynman", "Richard Feynman", 1918, "usa", "phd", "male", "scientist", "usa"),
    ("jane_goodall", "Jane Goodall", 1934, "uk", "phd", "female", "scientist", "uk"),
    ("rosalind_franklin", "Rosalind Franklin", 1920, "uk", "phd", "female", "scientist", "uk"),
    ("carl_sagan", "Carl Sagan", 1934, "usa", "phd", "male", "scientist", "usa"),
    ("grace_hopper", "Grace Hopper", 1906, "usa", "phd", "female", "scientist", "usa"),
    ("tim_berners_lee", "Tim Berners-Lee", 1955, "uk", "bachelor", "male", "scientist", "uk"),
    ("sigmund_freud", "Sigmund Freud", 1856, "czechia", "medicine", "male", "scientist", "austria"),
    # politicians
    ("barack_obama", "Barack Obama", 1961, "usa", "law", "male", "politician", "usa"),
    ("abraham_lincoln", "Abraham Lincoln", 1809, "usa", "none", "male", "politician", "usa"),
    ("winston_churchill", "Winston Churchill", 1874, "uk", "none", "male", "politician", "uk"),
    ("mahatma_gandhi", "Mahatma Gandhi", 1869, "india", "law", "male", "politician", "india"),
    ("nelson_mandela", "Nelson Mandela", 1918, "south africa", "law", "male", "politician", "south africa"),
    ("margaret_thatcher", "Margaret Thatcher", 1925, "uk", "bachelor", "female", "politician", "uk"),
    ("angela_merkel", "Angela Merkel", 1954, "germany", "phd", "female", "politician", "germany"),
    ("john_f_kennedy", "John F. Kennedy", 1917, "usa", "bachelor", "male", "politician", "usa"),
    ("indira_gandhi", "Indira Gandhi", 1917, "india", "dropout", "female", "politician", "india"),
    ("justin_trudeau", "Justin Trudeau", 1971, "canada", "bachelor", "male", "politician", "canada"),
    ("jacinda_ardern", "Jacinda Ardern", 1980, "new zealand", "bachelor", "female", "politician", "new zealand"),
    ("benazir_bhutto", "Benazir Bhutto", 1953, "pakistan", "bachelor", "female", "politician", "pakistan"),
    ("hillary_clinton", "Hillary Clinton", 1947, "usa", "law", "female", "politician", "usa"),
    ("napoleon_bonaparte", "Napoleon Bonaparte", 1769, "france", "none", "male", "politician", "france"),
    # artists
    ("pablo_picasso", "Pablo Picasso", 1881, "spain", "none", "male", "artist", "spain"),
    ("leonardo_da_vinci", "Leonardo da Vinci", 1452, "italy", "none", "male", "artist", "italy"),
    ("vincent_van_gogh", "Vincent van Gogh", 1853, "netherlands", "dropout", "male", "artist", "netherlands"),
    ("frida_kahlo", "Frida Kahlo", 1907, "mexico", "none", "female", "artist", "mexico"),
    ("claude_monet", "Claude Monet", 1840, "france", "none", "male", "artist", "france"),
    ("andy_warhol", "Andy Warhol", 1928, "usa", "bachelor", "male", "artist", "usa"),
    ("georgia_okeeffe", "Georgia O'Keeffe", 1887, "usa", "none", "female", "artist", "usa"),
    ("salvador_dali", "Salvador Dali", 1904, "spain", "dropout", "male", "artist", "spain"),
    ("yayoi_kusama", "Yayoi Kusama", 1929, "japan", "none", "female", "artist", "japan"),
    ("michelangelo", "Michelangelo", 1475, "italy", "none", "male", "artist", "italy"),
    # musicians
    ("ludwig_van_beethoven", "Ludwig van Beethoven", 1770, "germany", "none", "male", "musician", "germany"),
    ("wolfgang_mozart", "Wolfgang Amadeus Mozart", 1756, "austria", "none", "male", "musician", "austria"),
    ("johann_sebastian_bach", "Johann Sebastian Bach", 1685, "germany", "none", "male", "musician", "germany"),
    ("elvis_presley", "Elvis Presley", 1935, "usa", "none", "male", "musician", "usa"),
    ("john_lennon", "John Lennon", 1940, "uk", "dropout", "male", "musician", "uk"),
    ("madonna", "Madonna", 1958, "usa", "dropout", "female", "musician", "usa"),
    ("beyonce", "Beyonce", 1981, "usa", "none", "female", "musician", "usa"),
    ("bob_marley", "Bob Marley", 1945, "jamaica", "none", "male", "musician", "jamaica"),
    ("adele", "Adele", 1988, "uk", "none", "female", "musician", "uk"),
    ("taylor_swift", "Taylor Swift", 1989, "usa", "none", "female", "musician", "usa"),
    ("aretha_franklin", "Aretha Franklin", 1942, "usa", "none", "female", "musician", "usa"),
    ("luciano_pavarotti", "Luciano Pavarotti", 1935, "italy", "none", "male", "musician", "italy"),
    ("shakira", "Shakira", 1977, "colombia", "none", "female", "musician", "colombia"),
    ("psy", "Psy", 1977, "south korea", "dropout", "male", "musician", "south korea"),
    # actors
    ("marilyn_monroe", "Marilyn Monroe", 1926, "usa", "dropout", "female", "actor", "usa"),
    ("charlie_chaplin", "Charlie Chaplin", 1889, "uk", "none", "male", "actor", "uk"),
    ("meryl_streep", "Meryl Streep", 1949, "usa", "master", "female", "actor", "usa"),
    ("tom_hanks", "Tom Hanks", 1956, "usa", "dropout", "male", "actor", "usa"),
    ("audrey_hepburn", "Audrey Hepburn", 1929, "belgium", "none", "female", "actor", "uk"),
    ("denzel_washington", "Denzel Washington", 1954, "usa", "bachelor", "male", "actor", "usa"),
    ("jackie_chan", "Jackie Chan", 1954, "china", "none", "male", "actor", "china"),
    ("amitabh_bachchan", "Amitabh Bachchan", 1942, "india", "bachelor", "male", "actor", "india"),
    ("cate_blanchett", "Cate Blanchett", 1969, "australia", "bachelor", "female", "actor", "australia"),
    ("morgan_freeman", "Morgan Freeman", 1937, "usa", "none", "male", "actor", "usa"),
    ("sophia_loren", "Sophia Loren", 1934, "italy", "none", "female", "actor", "italy"),
    ("arnold_schwarzenegger", "Arnold Schwarzenegger", 1947, "austria", "bachelor", "male", "actor", "usa"),
    # athletes
    ("muhammad_ali", "Muhammad Ali", 1942, "usa", "none", "male", "athlete", "usa"),
    ("serena_williams", "Serena Williams", 1981, "usa", "none", "female", "athlete", "usa"),
    ("pele", "Pele", 1940, "brazil", "none", "male", "athlete", "brazil"),
    ("usain_bolt", "Usain Bolt", 1986, "jamaica", "none", "male", "athlete", "jamaica"),
    ("michael_jordan", "Michael Jordan", 1963, "usa", "bachelor", "male", "athlete", "usa"),
    ("lionel_messi", "Lionel Messi", 1987, "argentina", "none", "male", "athlete", "argentina"),
    ("cristiano_ronaldo", "Cristiano Ronaldo", 1985, "portugal", "none", "male", "athlete", "portugal"),
    ("simone_biles", "Simone Biles", 1997, "usa", "none", "female", "athlete", "usa"),
    ("roger_federer", "Roger Federer", 1981, "switzerland", "none", "male", "athlete", "switzerland"),
    ("sachin_tendulkar", "Sachin Tendulkar", 1973, "india", "none", "male", "athlete", "india"),
    ("billie_jean_king", "Billie Jean King", 1943, "usa", "dropout", "female", "athlete", "usa"),
    ("yao_ming", "Yao Ming", 1980, "china", "bachelor", "male", "athlete", "china"),
    # writers
    ("william_shakespeare", "William Shakespeare", 1564, "uk", "none", "male", "writer", "uk"),
    ("jane_austen", "Jane Austen", 1775, "uk", "none", "female", "writer", "uk"),
    ("mark_twain", "Mark Twain", 1835, "usa", "none", "male", "writer", "usa"),
    ("jk_rowling", "J.K. Rowling", 1965, "uk", "bachelor", "female", "writer", "uk"),
    ("ernest_hemingway", "Ernest Hemingway", 1899, "usa", "none", "male", "writer", "usa"),
    ("maya_angelou", "Maya Angelou", 1928, "usa", "none", "female", "writer", "usa"),
    ("leo_tolstoy", "Leo Tolstoy", 1828, "russia", "dropout", "male", "writer", "russia"),
    ("gabriel_garcia_marquez", "Gabriel Garcia Marquez", 1927, "colombia", "dropout", "male", "writer", "colombia"),
    ("agatha_christie", "Agatha Christie", 1890, "uk", "none", "female", "writer", "uk"),
    ("george_orwell", "George Orwell", 1903, "india", "none", "male", "writer", "uk"),
    ("haruki_murakami", "Haruki Murakami", 1949, "japan", "bachelor", "male", "writer", "japan"),
    ("chinua_achebe", "Chinua Achebe", 1930, "nigeria", "bachelor", "male", "writer", "nigeria"),
    # entrepreneurs
    ("bill_gates", "Bill Gates", 1955, "usa", "dropout", "male", "entrepreneur", "usa"),
    ("steve_jobs", "Steve Jobs", 1955, "usa", "dropout", "male", "entrepreneur", "usa"),
    ("elon_musk", "Elon Musk", 1971, "south africa", "bachelor", "male", "entrepreneur", "usa"),
    ("oprah_winfrey", "Oprah Winfrey", 1954, "usa", "bachelor", "female", "entrepreneur", "usa"),
    ("jeff_bezos", "Jeff Bezos", 1964, "usa", "bachelor", "male", "entrepreneur", "usa"),
    ("mark_zuckerberg", "Mark Zuckerberg", 1984, "usa", "dropout", "male", "entrepreneur", "usa"),
    ("richard_branson", "Richard Branson", 1950, "uk", "dropout", "male", "entrepreneur", "uk"),
    ("jack_ma", "Jack Ma", 1964, "china", "bachelor", "male", "entrepreneur", "china"),
    ("estee_lauder", "Estee Lauder", 1906, "usa", "none", "female", "entrepreneur", "usa"),
    ("henry_ford", "Henry Ford", 1863, "usa", "none", "male", "entrepreneur", "usa"),
    ("coco_chanel", "Coco Chanel", 1883, "france", "none", "female", "entrepreneur", "france"),
    ("walt_disney", "Walt Disney", 1901, "usa", "dropout", "male", "entrepreneur", "usa"),
]

EUROPE = {"uk", "germany", "austria", "france", "italy", "spain", "poland",
          "netherlands", "switzerland", "russia", "serbia", "czechia",
          "belgium", "portugal"}
ASIA = {"india", "china", "japan", "pakistan", "south korea"}
ENGLISH = {"usa", "uk", "canada", "australia", "new zealand", "jamaica",
           "south africa", "nigeria"}
NORTH_AMERICA = {"usa", "canada", "mexico", "jamaica"}
MEDITERRANEAN = {"italy", "spain", "france"}
SOUTHERN = {"brazil", "argentina", "australia", "new zealand", "south africa"}
COMMONWEALTH = {"uk", "canada", "australia", "new zealand", "india",
                "pakistan", "south africa", "jamaica", "nigeria"}
DEGREES_ANY = {"bachelor", "master", "phd", "law", "medicine"}


def build_questions(records):
    years = sorted({r["attributes"]["birthday"] for r in records})
    places = {r["attributes"]["birthplace"] for r in records}
    nats = {r["attributes"]["nationality"] for r in records}

    def yrs(pred):
        return sorted(y for y in years if pred(y))

    full = [
        ("birthday", "Was this person born before 1900?", yrs(lambda y: y < 1900)),
        ("birthday", "Was this person born before 1950?", yrs(lambda y: y < 1950)),
        ("birthday", "Was this person born after 1970?", yrs(lambda y: y > 1970)),
        ("birthplace", "Was this person born in the USA?", ["usa"]),
        ("birthplace", "Was this person born in Europe?", sorted(EUROPE & places)),
        ("birthplace", "Was this person born in Asia?", sorted(ASIA & places)),
        ("birthplace", "Was this person born in the UK?", ["uk"]),
        ("birthplace", "Was this person born in Germany or Austria?", sorted({"germany", "austria"} & places)),
        ("birthplace", "Was this person born in an English-speaking country?", sorted(ENGLISH & places)),
        ("birthplace", "Was this person born in North America?", sorted(NORTH_AMERICA & places)),
        ("birthplace", "Was this person born in a Mediterranean country?", sorted(MEDITERRANEAN & places)),
        ("birthplace", "Was this person born in the southern hemisphere?", sorted(SOUTHERN & places)),
        ("degree", "Does this person have a PhD?", ["phd"]),
        ("degree", "Does this person have a university degree?", sorted(DEGREES_ANY)),
        ("degree", "Does this person have a law or medicine degree?", ["law", "medicine"]),
        ("degree", "Did this person drop out of school?", ["dropout"]),
        ("gender", "Is this person male?", ["male"]),
        ("gender", "Is this person female?", ["female"]),
        ("profession", "Is this person a scientist?", ["scientist"]),
        ("profession", "Is this person a politician?", ["politician"]),
        ("profession", "Is this person an artist?", ["artist"]),
        ("profession", "Is this person a musician?", ["musician"]),
        ("profession", "Is this person an actor?", ["actor"]),
        ("profession", "Is this person an athlete?", ["athlete"]),
        ("profession", "Is this person a writer?", ["writer"]),
        ("profession", "Does this person work in the arts?", ["actor", "artist", "musician", "writer"]),
        ("nationality", "Is this person a citizen of the USA?", ["usa"]),
        ("nationality", "Is this person a citizen of an Asian country?", sorted(ASIA & nats)),
        ("nationality", "Is this person a citizen of a European country?", sorted(EUROPE & nats)),
        ("nationality", "Is this person a citizen of an English-speaking country?", sorted(ENGLISH & nats)),
        ("nationality", "Is this person a citizen of a Commonwealth country?", sorted(COMMONWEALTH & nats)),
    ]
    return [
        {"qid": i, "attribute": a, "surface_text": t, "yes_set": ys}
        for i, (a, t, ys) in enumerate(full)
    ]


def build_desk_questions(records):
    """Ten questions for the 30-person roster, |Q|/D kept near the full
    bank's ratio. Yes-sets are chosen to split the roster close to the
    middle: balanced splits shrink the candidate set gradually, so a single
    bad slot write rarely empties it outright."""
    years = sorted({r["attributes"]["birthday"] for r in records})
    places = {r["attributes"]["birthplace"] for r in records}
    degrees = {r["attributes"]["degree"] for r in records}
    profs = {r["attributes"]["profession"] for r in records}
    desk = [
        ("birthday", "Was this person born before 1935?", sorted(y for y in years if y < 1935)),
        ("birthday", "Was this person born before 1950?", sorted(y for y in years if y < 1950)),
        ("birthplace", "Was this person born in the USA?", ["usa"]),
        ("birthplace", "Was this person born in Europe?", sorted(EUROPE & places)),
        ("birthplace", "Was this person born in an English-speaking country?", sorted(ENGLISH & places)),
        ("degree", "Does this person have a university degree?", sorted(DEGREES_ANY & degrees)),
        ("gender", "Is this person male?", ["male"]),
        ("profession", "Does this person work in the arts?",
         sorted({"actor", "artist", "musician", "writer"} & profs)),
        ("profession", "Is this person a performer?", sorted({"actor", "musician"} & profs)),
        ("nationality", "Is this person a citizen of the USA?", ["usa"]),
    ]
    return [
        {"qid": i, "attribute": a, "surface_text": t, "yes_set": ys}
        for i, (a, t, ys) in enumerate(desk)
    ]


def records_from_roster(roster):
    recs = []
    for slug, name, year, place, degree, gender, prof, nat in roster:
        recs.append({
            "id": slug,
            "name": name,
            "attributes": {
                "birthday": year,
                "birthplace": place,
                "degree": degree,
                "gender": gender,
                "profession": prof,
                "nationality": nat,
            },
        })
    return recs


def signature(record, questions):
    sig = []
    for q in questions:
        val = record["attributes"][q["attribute"]]
        sig.append(val in set(q["yes_set"]))
    return tuple(sig)


def select_desk_roster(all_records, size=30):
    """Greedy pick, cycling professions, skipping signature collisions."""
    by_prof = {}
    for r in all_records:
        by_prof.setdefault(r["attributes"]["profession"], []).append(r)
    order = sorted(by_prof)
    chosen, seen = [], set()
    idx = {p: 0 for p in order}
    while len(chosen) < size:
        progressed = False
        for p in order:
            if len(chosen) >= size:
                break
            pool = by_prof[p]
            while idx[p] < len(pool):
                cand = pool[idx[p]]
                idx[p] += 1
                sig = signature(cand, build_desk_questions(records_from_roster(PEOPLE)))
                if sig not in seen:
                    seen.add(sig)
                    chosen.append(cand)
                    progressed = True
                    break
        if not progressed:
            raise SystemExit("could not assemble %d unique desk personas" % size)
    return sorted(chosen, key=lambda r: r["id"])


def attribute_domains(records):
    domains = {}
    for r in records:
        for k, v in r["attributes"].items():
            domains.setdefault(k, set()).add(v)
    return {k: sorted(v) for k, v in domains.items()}


def write_persona_bank(path, records, questions):
    doc = {
        "schema_version": 1,
        "attribute_domains": attribute_domains(records),
        "records": sorted(records, key=lambda r: r["id"]),
        "questions": questions,
    }
    # sanity: every question splits the roster non-trivially
    for q in questions:
        n = sum(1 for r in records if r["attributes"][q["attribute"]] in set(q["yes_set"]))
        assert 0 < n < len(records), (q["surface_text"], n)
        dom = set(doc["attribute_domains"][q["attribute"]])
        assert set(q["yes_set"]) < dom and q["yes_set"], q["surface_text"]
    path.write_text(json.dumps(doc, indent=1) + "\n")
    print("wrote %s: %d records, %d questions" % (path.name, len(records), len(questions)))


# ---------------------------------------------------------------------------
# Utterance banks. Curated heads first (these make up the desk bank); the
# combinatorial tail pads the full bank to the target inventory. Strings may
# repeat across intents (hedges), never within one intent.
# ---------------------------------------------------------------------------

YES_HEAD = [
    ("yeah", 700), ("yes", 640), ("right", 390), ("uh huh", 310), ("yep", 220),
    ("that's right", 180), ("i think so", 170), ("sure", 150), ("of course", 130),
    ("yes i think so", 120), ("absolutely", 110), ("exactly", 100), ("correct", 95),
    ("i believe so", 90), ("yeah definitely", 80), ("true", 76), ("oh yeah", 72),
    ("definitely", 68), ("that is true", 62), ("probably", 58), ("i guess so", 52),
    ("for sure", 48), ("no yeah", 44), ("yeah i would say so", 40), ("i would think so", 38),
    ("indeed", 36), ("certainly", 34), ("i suppose so", 30), ("that sounds right", 28),
    ("most likely", 26), ("kind of yeah", 24), ("sort of", 22), ("seems like it", 20),
    ("as far as i know yes", 18), ("yes definitely", 17), ("quite right", 16),
    ("i'd say yes", 15), ("you could say that", 14), ("pretty sure yes", 13),
    ("yeah i think", 12), ("that would be a yes", 11), ("very much so", 10),
    ("i agree", 9), ("affirmative", 8), ("without a doubt", 8), ("yeah pretty much", 7),
    ("more or less yes", 7), ("oh definitely", 6), ("it does seem that way", 6),
    ("i'm fairly sure yes", 5), ("not exactly but close to yes", 5), ("yeah exactly", 5),
    ("right right", 4), ("he is", 4), ("she is", 4), ("i'd have to say yes", 4),
    ("that's correct", 3), ("yes indeed", 3), ("suppose so", 3), ("mhm", 3),
]
NO_HEAD = [
    ("no", 720), ("nope", 260), ("i don't think so", 210), ("not really", 190),
    ("no way", 95), ("definitely not", 85), ("i doubt it", 72), ("probably not", 66),
    ("yeah no", 60), ("not at all", 56), ("i'm afraid not", 44), ("no no", 40),
    ("he is not", 38), ("he's not", 36), ("she is not", 34), ("don't believe so", 32),
    ("maybe not", 30), ("i don't believe so", 28), ("certainly not", 26), ("nah", 24),
    ("no i don't think so", 22), ("sort of", 20), ("not that i know of", 19),
    ("no not really", 18), ("i would say no", 17), ("not exactly", 16),
    ("that's not right", 15), ("i don't think that's the case", 14), ("negative", 13),
    ("kind of but not really", 12), ("no definitely not", 11), ("it doesn't seem so", 10),
    ("not as far as i know", 9), ("i really doubt it", 8), ("no chance", 8),
    ("absolutely not", 7), ("wrong", 7), ("that is wrong", 6), ("afraid not", 6),
    ("not quite", 5), ("no i'm afraid", 5), ("i wouldn't say that", 4),
    ("not exactly but close to no", 4), ("no that's wrong", 4), ("doubtful", 3),
    ("it's not", 3), ("she's not", 3), ("no not at all", 3), ("uh no", 3), ("hm no", 2),
]
UNKNOWN_HEAD = [
    ("i don't know", 520), ("i'm not sure", 310), ("maybe", 260), ("not sure", 150),
    ("hard to say", 120), ("i have no idea", 110), ("no idea", 92), ("probably", 70),
    ("who knows", 62), ("i can't say", 56), ("maybe not", 48), ("probably not", 44),
    ("i couldn't tell you", 40), ("i really don't know", 36), ("i guess so", 34),
    ("it depends", 30), ("i'm not certain", 26), ("can't remember", 22),
    ("i don't remember", 20), ("i doubt it", 18), ("sort of", 16), ("perhaps", 14),
    ("i wouldn't know", 12), ("couldn't say", 10), ("beats me", 9), ("no clue", 8),
    ("i'm not positive", 7), ("don't know really", 6), ("hmm i don't know", 5),
    ("that's a tough one", 4),
]

# The desk bank is the SWDA-style head re-weighted so that hedge phrases
# carry real mass in two or three intents at once: an argmax classifier on
# these strings tops out well below 1.0, which is what keeps the modular
# baseline's tracker fallible at desk scale.
DESK_YES = [
    ('yeah', 700), ('yes', 640), ('right', 390), ('uh huh', 310), ('sort of', 230),
    ('yep', 220), ("that's right", 180), ('i think so', 170), ('kind of', 150), ('sure', 150),
    ('of course', 130), ('probably', 130), ('yes i think so', 120), ('absolutely', 110),
    ('i guess so', 105), ('exactly', 100), ('correct', 95), ('i believe so', 90),
    ('more or less', 90), ('yes and no', 90), ('yeah definitely', 80), ('true', 76),
    ('oh yeah', 72), ('in a way', 70), ('definitely', 68), ('that is true', 62),
    ('pretty much', 60), ('for sure', 48), ('well sort of', 48), ('no yeah', 44),
    ('seems like it', 44), ('i suppose', 40), ('maybe', 40), ('yeah i would say so', 40),
    ('i would think so', 38), ('i mean kind of', 36), ('indeed', 36), ('barely', 34),
    ('certainly', 34), ('i suppose so', 30), ('that sounds right', 28), ('most likely', 26),
    ('depends', 24), ('kind of yeah', 24), ('as far as i know yes', 18),
    ('yes definitely', 17), ('quite right', 16), ("i'd say yes", 15),
    ('you could say that', 14), ('pretty sure yes', 13), ('yeah i think', 12),
    ('that would be a yes', 11), ('very much so', 10), ('i agree', 9), ('affirmative', 8),
    ('without a doubt', 8), ('more or less yes', 7), ('yeah pretty much', 7),
    ('it does seem that way', 6), ('oh definitely', 6), ("i'm fairly sure yes", 5),
    ('not exactly but close to yes', 5), ('yeah exactly', 5), ('he is', 4),
    ("i'd have to say yes", 4), ('right right', 4), ('she is', 4), ('mhm', 3),
    ('suppose so', 3), ("that's correct", 3), ('yes indeed', 3)
]
DESK_NO = [
    ('no', 720), ('nope', 260), ("i don't think so", 210), ('not really', 190),
    ('sort of', 185), ('probably not', 130), ('kind of', 120), ('i doubt it', 95),
    ('maybe not', 95), ('no way', 95), ('definitely not', 85), ('yes and no', 80),
    ('more or less', 70), ('in a way', 60), ('yeah no', 60), ('not at all', 56),
    ('not quite', 48), ("i'm afraid not", 44), ('no no', 40), ('well sort of', 40),
    ('he is not', 38), ("he's not", 36), ('she is not', 34), ("don't believe so", 32),
    ('barely', 30), ('i mean kind of', 30), ("i don't believe so", 28), ('certainly not', 26),
    ('nah', 24), ("no i don't think so", 22), ('depends', 20), ('pretty much', 20),
    ('not that i know of', 19), ('no not really', 18), ('not that i can say', 18),
    ('i would say no', 17), ('not exactly', 16), ("that's not right", 15),
    ("i don't think that's the case", 14), ('negative', 13), ('i suppose', 12),
    ('kind of but not really', 12), ('seems like it', 12), ('no definitely not', 11),
    ("it doesn't seem so", 10), ('not as far as i know', 9), ('i really doubt it', 8),
    ('no chance', 8), ('absolutely not', 7), ('wrong', 7), ('afraid not', 6),
    ('that is wrong', 6), ("no i'm afraid", 5), ("i wouldn't say that", 4),
    ("no that's wrong", 4), ('not exactly but close to no', 4), ('doubtful', 3),
    ("it's not", 3), ('no not at all', 3), ("she's not", 3), ('uh no', 3), ('hm no', 2)
]
DESK_UNKNOWN = [
    ("i don't know", 520), ("i'm not sure", 310), ('maybe', 260), ('not sure', 150),
    ('probably', 150), ('maybe not', 140), ('hard to say', 120), ('probably not', 115),
    ('i have no idea', 110), ('not really', 95), ('no idea', 92), ('i doubt it', 90),
    ('i guess so', 85), ('sort of', 75), ('i think so', 70), ('who knows', 62),
    ("i can't say", 56), ('kind of', 50), ('depends', 45), ("i couldn't tell you", 40),
    ("i really don't know", 36), ('it depends', 30), ('i suppose', 26),
    ("i'm not certain", 26), ('seems like it', 26), ("can't remember", 22),
    ("i don't remember", 20), ('more or less', 15), ('perhaps', 14), ("i wouldn't know", 12),
    ('not that i can say', 12), ("couldn't say", 10), ('in a way', 10), ('beats me', 9),
    ('no clue', 8), ("i'm not positive", 7), ("don't know really", 6), ("hmm i don't know", 5),
    ("that's a tough one", 4)
]

TAIL_PREFIXES = ["", "oh ", "well ", "um ", "uh ", "i mean ", "you know ",
                 "honestly ", "actually ", "hmm "]
TAIL_SUFFIXES = ["", " i think", " i'd say", " as far as i know", " if i remember right",
                 " pretty sure", " to be honest", " really", " in fact", " you know"]
YES_CORES = ["yes", "yeah", "yep", "that is true", "i would say so", "that sounds right",
             "i agree with that", "most likely yes", "surely", "certainly yes",
             "that is correct", "it's true", "quite so", "indeed yes", "right you are",
             "seems so", "i'd say that's a yes", "very true", "no doubt about it",
             "you bet"]
NO_CORES = ["no", "nope", "not really", "i don't think so", "that is false",
            "i would say no", "that doesn't sound right", "i disagree with that",
            "most likely no", "surely not", "certainly no", "that is incorrect",
            "it's false", "quite the opposite", "indeed no", "wrong i'm afraid",
            "seems not", "i'd say that's a no", "very untrue", "no sir"]
UNKNOWN_CORES = ["i don't know", "i'm not sure", "maybe", "hard to tell",
                 "i have no clue", "who can say", "i can't recall", "it's unclear",
                 "i'm uncertain", "can't tell you", "i forget", "your guess is as good as mine",
                 "not a clue", "i'm drawing a blank", "couldn't possibly say"]


def build_bank(head, cores, target):
    entries = dict(head)
    assert len(entries) == len(head), "duplicate string within one intent head"
    rank = len(entries)
    for core in cores:
        for suf in TAIL_SUFFIXES:
            for pre in TAIL_PREFIXES:
                if len(entries) >= target:
                    return list(entries.items())
                text = (pre + core + suf).strip()
                if text in entries:
                    continue
                rank += 1
                entries[text] = max(1, round(240 / rank))
    raise SystemExit("tail exhausted before reaching %d entries" % target)


def write_utterance_bank(path, yes, no, unknown):
    doc = {
        "schema_version": 1,
        "metadata": {"unique_counts": {"yes": len(yes), "no": len(no), "unknown": len(unknown)}},
        "entries": {"yes": yes, "no": no, "unknown": unknown},
    }
    for entries in (yes, no, unknown):
        texts = [t for t, _ in entries]
        assert len(texts) == len(set(texts))
        assert all(c > 0 for _, c in entries)
    path.write_text(json.dumps(doc, indent=1) + "\n")
    print("wrote %s: %s" % (path.name, doc["metadata"]["unique_counts"]))


def ambiguity_report(yes, no, unknown):
    """Bayes error of an argmax-by-string intent classifier, under priors
    typical of simulated play (answers mostly yes/no, unknowns rare)."""
    priors = {"yes": 0.40, "no": 0.55, "unknown": 0.05}
    pools = {"yes": dict(yes), "no": dict(no), "unknown": dict(unknown)}
    totals = {k: sum(v.values()) for k, v in pools.items()}
    mistake = Counter()
    for truth, pool in pools.items():
        for text, c in pool.items():
            p_sample = priors[truth] * c / totals[truth]
            post = {k: priors[k] * pools[k].get(text, 0) / totals[k] for k in pools}
            guess = max(sorted(post), key=lambda k: post[k])
            if guess != truth:
                mistake[(truth, guess)] += p_sample
    total = sum(mistake.values())
    eliminating = sum(v for (t, g), v in mistake.items() if g in ("yes", "no"))
    print("argmax-classifier error rate: %.4f  (target-eliminating: %.4f)" % (total, eliminating))
    for k, v in sorted(mistake.items()):
        print("   %s -> %s : %.4f" % (k[0], k[1], v))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    full_records = records_from_roster(PEOPLE)
    assert len(full_records) == 100
    full_questions = build_questions(full_records)
    assert len(full_questions) == 31
    counts = Counter(q["attribute"] for q in full_questions)
    assert counts == Counter(birthday=3, birthplace=9, degree=4, gender=2,
                             profession=8, nationality=5), counts
    write_persona_bank(OUT / "personas_full.json", full_records, full_questions)

    desk_records = select_desk_roster(full_records)
    desk_questions = build_desk_questions(desk_records)
    sigs = {signature(r, desk_questions) for r in desk_records}
    assert len(sigs) == len(desk_records), "desk roster not uniquely identifiable"
    write_persona_bank(OUT / "personas_desk.json", desk_records, desk_questions)

    yes_full = build_bank(YES_HEAD, YES_CORES, 508)
    no_full = build_bank(NO_HEAD, NO_CORES, 445)
    unknown_full = build_bank(UNKNOWN_HEAD, UNKNOWN_CORES, 251)
    write_utterance_bank(OUT / "utterances_full.json", yes_full, no_full, unknown_full)
    write_utterance_bank(OUT / "utterances_desk.json", DESK_YES, DESK_NO, DESK_UNKNOWN)
    ambiguity_report(DESK_YES, DESK_NO, DESK_UNKNOWN)


if __name__ == "__main__":
    main()
