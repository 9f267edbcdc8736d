#!/usr/bin/env python3
"""Regenerates the toy corpora under data/. Output is deterministic."""

import argparse
import random
from pathlib import Path

TOPICS = {
    "food": ["pizza", "soup", "salad", "pasta", "bread", "curry"],
    "sport": ["match", "game", "race", "team", "coach", "league"],
    "weather": ["weather", "storm", "sky", "breeze", "forecast", "rain"],
    "music": ["song", "album", "concert", "band", "singer", "melody"],
    "travel": ["trip", "hotel", "flight", "beach", "tour", "journey"],
    "tech": ["phone", "laptop", "app", "screen", "battery", "camera"],
}

POSITIVE = [
    "wonderful", "great", "excellent", "superb", "lovely", "delightful", "amazing", "fantastic",
    "brilliant", "pleasant", "charming", "splendid", "marvelous", "terrific", "fabulous", "enjoyable",
    "impressive", "outstanding", "perfect", "beautiful", "gorgeous", "stunning", "glorious", "cheerful",
    "refreshing", "elegant", "wholesome", "graceful", "remarkable", "exquisite", "superior", "joyful",
    "uplifting", "dazzling", "magnificent", "admirable", "flawless", "heavenly", "sublime", "radiant",
]

NEGATIVE = [
    "terrible", "awful", "horrible", "dreadful", "poor", "bad", "disappointing", "boring",
    "nasty", "miserable", "annoying", "mediocre", "lousy", "unpleasant", "dull", "ugly",
    "painful", "awkward", "tedious", "frustrating", "dismal", "shabby", "gloomy", "clumsy",
    "bland", "sloppy", "dreary", "pathetic", "appalling", "atrocious", "grim", "inferior",
    "woeful", "abysmal", "irritating", "wretched", "crummy", "rotten", "hideous", "messy",
]

ADVERBS = ["really", "quite", "very", "so", "truly", "rather"]

SENTENCE_TEMPLATES = [
    "the {n} was {a}",
    "the {n} was {r} {a}",
    "i thought the {n} was {a}",
    "honestly the {n} felt {a}",
    "that {n} is {a} and {b}",
    "our {n} seemed {r} {a}",
    "the {n} looked {a} today",
    "what a {a} {n}",
]

RESPONSES = {
    1: ["glad the {n} was {a}", "that sounds {a}", "nice , a {a} {n} is rare", "happy to hear it was {a}"],
    0: ["sorry the {n} was {a}", "that sounds {a}", "too bad , a {a} {n} is no fun", "sad to hear it was {a}"],
}

WEAT = {
    "01_eur_afr_names_pleasant_a": {
        "name": "European-American vs African-American names / pleasant vs unpleasant 1",
        "ref": "a",
        "X": "Adam Harry Josh Roger Alan Frank Justin Ryan Andrew Jack Matthew Stephen Brad Greg Paul Jonathan "
             "Peter Amanda Courtney Heather Melanie Katie Betsy Kristin Nancy Stephanie Ellen Lauren Colleen Emily "
             "Megan Rachel",
        "Y": "Alonzo Jamel Theo Alphonse Jerome Leroy Torrance Darnell Lamar Lionel Tyree Deion Lamont Malik "
             "Terrence Tyrone Lavon Marcellus Wardell Nichelle Shereen Ebony Latisha Shaniqua Jasmine Tanisha Tia "
             "Lakisha Latoya Yolanda Malika Yvette",
        "A": "caress freedom health love peace cheer friend heaven loyal pleasure diamond gentle honest lucky "
             "rainbow diploma gift honor miracle sunrise family happy laughter paradise vacation",
        "B": "abuse crash filth murder sickness accident death grief poison stink assault disaster hatred pollute "
             "tragedy bomb divorce jail poverty ugly cancer evil kill rotten vomit",
    },
    "02_eur_afr_names_pleasant_from_a": {
        "name": "European-American vs African-American names / pleasant vs unpleasant from (a)",
        "ref": "b",
        "X": "Brad Brendan Geoffrey Greg Brett Jay Matthew Neil Todd Allison Anne Carrie Emily Jill Laurie "
             "Kristen Meredith Sarah",
        "Y": "Darnell Hakim Jermaine Kareem Jamal Leroy Rasheed Tremayne Tyrone Aisha Ebony Keisha Kenya Latonya "
             "Lakisha Latoya Tamika Tanisha",
        "A": "caress freedom health love peace cheer friend heaven loyal pleasure diamond gentle honest lucky "
             "rainbow diploma gift honor miracle sunrise family happy laughter paradise vacation",
        "B": "abuse crash filth murder sickness accident death grief poison stink assault disaster hatred pollute "
             "tragedy bomb divorce jail poverty ugly cancer evil kill rotten vomit",
    },
    "03_eur_afr_names_pleasant_from_c": {
        "name": "European-American vs African-American names / pleasant vs unpleasant from (c)",
        "ref": "b",
        "X": "Brad Brendan Geoffrey Greg Brett Jay Matthew Neil Todd Allison Anne Carrie Emily Jill Laurie "
             "Kristen Meredith Sarah",
        "Y": "Darnell Hakim Jermaine Kareem Jamal Leroy Rasheed Tremayne Tyrone Aisha Ebony Keisha Kenya Latonya "
             "Lakisha Latoya Tamika Tanisha",
        "A": "joy love peace wonderful pleasure friend laughter happy",
        "B": "agony terrible horrible nasty evil war awful failure",
    },
    "04_male_female_names_career_family": {
        "name": "Male vs female names / career vs family",
        "ref": "c",
        "X": "John Paul Mike Kevin Steve Greg Jeff Bill",
        "Y": "Amy Joan Lisa Sarah Diana Kate Ann Donna",
        "A": "executive management professional corporation salary office business career",
        "B": "home parents children family cousins marriage wedding relatives",
    },
    "05_math_arts_male_female": {
        "name": "Math vs arts / male vs female terms",
        "ref": "c",
        "X": "math algebra geometry calculus equations computation numbers addition",
        "Y": "poetry art dance literature novel symphony drama sculpture",
        "A": "male man boy brother he him his son",
        "B": "female woman girl sister she her hers daughter",
    },
    "06_science_arts_male_female": {
        "name": "Science vs arts / male vs female terms",
        "ref": "d",
        "X": "science technology physics chemistry Einstein NASA experiment astronomy",
        "Y": "poetry art Shakespeare dance literature novel symphony drama",
        "A": "brother father uncle grandfather son he his him",
        "B": "sister mother aunt grandmother daughter she hers her",
    },
    "07_mental_physical_temporary_permanent": {
        "name": "Mental vs physical disease / temporary vs permanent",
        "ref": "e",
        "X": "sad hopeless gloomy tearful miserable depressed",
        "Y": "sick illness influenza disease virus cancer",
        "A": "impermanent unstable variable fleeting short-term brief occasional",
        "B": "stable always constant persistent chronic prolonged forever",
    },
    "08_young_old_names_pleasant": {
        "name": "Young vs old people's names / pleasant vs unpleasant",
        "ref": "c",
        "X": "Tiffany Michelle Cindy Kristy Brad Eric Joey Billy",
        "Y": "Ethel Bernice Gertrude Agnes Cecil Wilbert Mortimer Edgar",
        "A": "joy love peace wonderful pleasure friend laughter happy",
        "B": "agony terrible horrible nasty evil war awful failure",
    },
    "09_flowers_insects_pleasant": {
        "name": "Flowers vs insects / pleasant vs unpleasant",
        "ref": "a",
        "X": "aster clover hyacinth marigold poppy azalea crocus iris orchid rose bluebell daffodil lilac pansy "
             "tulip buttercup daisy lily peony violet carnation gladiola magnolia petunia zinnia",
        "Y": "ant caterpillar flea locust spider bedbug centipede fly maggot tarantula bee cockroach gnat mosquito "
             "termite beetle cricket hornet moth wasp blackfly dragonfly horsefly roach weevil",
        "A": "caress freedom health love peace cheer friend heaven loyal pleasure diamond gentle honest lucky "
             "rainbow diploma gift honor miracle sunrise family happy laughter paradise vacation",
        "B": "abuse crash filth murder sickness accident death grief poison stink assault disaster hatred pollute "
             "tragedy divorce jail poverty ugly cancer kill rotten vomit agony prison",
    },
    "10_instruments_weapons_pleasant": {
        "name": "Instruments vs weapons / pleasant vs unpleasant",
        "ref": "a",
        "X": "bagpipe cello guitar lute trombone banjo clarinet harmonica mandolin trumpet bassoon drum harp oboe "
             "tuba bell fiddle harpsichord piano viola bongo flute horn saxophone violin",
        "Y": "arrow club gun missile spear axe dagger harpoon pistol sword blade dynamite hatchet rifle tank bomb "
             "firearm knife shotgun teargas cannon grenade mace slingshot whip",
        "A": "caress freedom health love peace cheer friend heaven loyal pleasure diamond gentle honest lucky "
             "rainbow diploma gift honor miracle sunrise family happy laughter paradise vacation",
        "B": "abuse crash filth murder sickness accident death grief poison stink assault disaster hatred pollute "
             "tragedy divorce jail poverty ugly cancer kill rotten vomit agony prison",
    },
}


def adjectives(label):
    return POSITIVE if label == 1 else NEGATIVE


class World:
    def __init__(self, seed):
        self.rng = random.Random(seed)

    def noun(self, topic=None):
        topic = topic or self.rng.choice(sorted(TOPICS))
        return topic, self.rng.choice(TOPICS[topic])

    def sentence(self, noun, label, template=None, a=None):
        a, b = self.rng.sample(adjectives(label), 2) if a is None else (a, self.rng.choice(adjectives(label)))
        t = template or self.rng.choice(SENTENCE_TEMPLATES)
        return t.format(n=noun, a=a, b=b, r=self.rng.choice(ADVERBS))

    # Adjective coverage matters more than template variety: cycle through
    # the lexicon so every word shows up in every corpus.
    def cycled(self, label, count):
        words = list(adjectives(label))
        out = []
        while len(out) < count:
            self.rng.shuffle(words)
            out.extend(words)
        return out[:count]


# A document keeps one polarity but wanders across topics, so the only thing
# neighbouring sentences reliably share is sentiment.
def neighbor_docs(world, docs, per_doc):
    pools = {label: world.cycled(label, docs * per_doc) for label in (0, 1)}
    out = []
    for i in range(docs):
        label = i % 2
        out.append([world.sentence(world.noun()[1], label, a=pools[label].pop()) for _ in range(per_doc)])
    return out


def response_pairs(world, count):
    out = []
    for i in range(count):
        label = i % 2
        _, noun = world.noun()
        reply = world.rng.choice(RESPONSES[label]).format(n=noun, a=world.rng.choice(adjectives(label)))
        out.append((world.sentence(noun, label, "the {n} was {r} {a}"), reply))
    return out


def nli_triples(world, count):
    out = []
    for i in range(count):
        kind = i % 3  # 0 entail, 1 contradict, 2 neutral
        label = world.rng.randrange(2)
        topic, noun = world.noun()
        a1, a2 = world.rng.sample(adjectives(label), 2)
        premise = f"the {noun} was {a1}"
        if kind == 0:
            hyp = f"the {noun} was {a2}"
        elif kind == 1:
            hyp = f"the {noun} was {world.rng.choice(adjectives(1 - label))}"
        else:
            other = world.rng.choice([t for t in sorted(TOPICS) if t != topic])
            hyp = f"the {world.noun(other)[1]} was {world.rng.choice(POSITIVE + NEGATIVE)}"
        out.append((premise, hyp, kind))
    return out


def sentiment_task(world, count):
    rows = []
    for label in (0, 1):
        words = world.cycled(label, count // 2)
        for a in words:
            _, noun = world.noun()
            t = world.rng.choice(["the {n} was {a}", "i found the {n} {r} {a}", "honestly , the {n} is {a}",
                                  "my {n} felt {a} ."])
            rows.append((t.format(n=noun, a=a, r=world.rng.choice(ADVERBS)), label))
    world.rng.shuffle(rows)
    return rows


def sts_pairs(world, count):
    rows = []
    for i in range(count):
        kind = i % 4
        label = world.rng.randrange(2)
        topic, noun = world.noun()
        a1, a2 = world.rng.sample(adjectives(label), 2)
        left = f"the {noun} was {a1}"
        if kind == 0:
            right, score = f"the {noun} was {a2}", 4.6
        elif kind == 1:
            right, score = f"the {noun} was {world.rng.choice(adjectives(1 - label))}", 1.2
        elif kind == 2:
            right, score = f"that {world.noun(topic)[1]} seemed {a2}", 3.4
        else:
            other = world.rng.choice([t for t in sorted(TOPICS) if t != topic])
            right, score = f"the {world.noun(other)[1]} was {world.rng.choice(adjectives(1 - label))}", 0.4
        rows.append((left, right, score))
    return rows


def word_vectors(rng, dim):
    words = POSITIVE[:25] + NEGATIVE[:25]
    lines = [f"{len(words)} {dim}"]
    for w in words:
        sign = 1.0 if w in POSITIVE else -1.0
        vec = [sign * (0.6 + 0.4 * rng.random())] + [rng.gauss(0.0, 0.3) for _ in range(dim - 1)]
        lines.append(w + " " + " ".join(f"{x:.6f}" for x in vec))
    return lines


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--seed", type=int, default=20180329)
    args = ap.parse_args()
    out = Path(args.out)
    (out / "toy").mkdir(parents=True, exist_ok=True)
    (out / "weat").mkdir(parents=True, exist_ok=True)

    world = World(args.seed)
    docs = neighbor_docs(world, 50, 4)
    (out / "toy" / "neighbor.txt").write_text("\n\n".join("\n".join(d) for d in docs) + "\n")
    pairs = response_pairs(world, 100)
    (out / "toy" / "response.tsv").write_text("".join(f"{a}\t{b}\n" for a, b in pairs))
    nli = nli_triples(world, 100)
    (out / "toy" / "nli.tsv").write_text("".join(f"{p}\t{h}\t{y}\n" for p, h, y in nli))
    senti = sentiment_task(world, 500)
    (out / "toy" / "sentiment.tsv").write_text("".join(f"{t}\t{y}\n" for t, y in senti))
    sts = sts_pairs(world, 20)
    (out / "toy" / "sts.tsv").write_text("".join(f"{a}\t{b}\t{s:.1f}\n" for a, b, s in sts))
    (out / "word_vectors_50.txt").write_text("\n".join(word_vectors(random.Random(args.seed + 1), 10)) + "\n")

    for stem, spec in WEAT.items():
        text = [f"name = {spec['name']}", f"ref = {spec['ref']}"]
        for key in "XYAB":
            text.append(f"{key} = " + ", ".join(spec[key].split()))
        (out / "weat" / f"{stem}.weat").write_text("\n".join(text) + "\n")


if __name__ == "__main__":
    main()
