#!/usr/bin/env python3
"""Regenerates the shipped bias-probing fixture under data/fixture/.

Templates are built from subject frames x predicates so that every template
exists in all five languages with a female-subject and a male-subject variant.
Counts per attribute: gender 27, race 27, religion 57, nationality 36.
"""

import json
import os
import random
import sys

LANGS = ["en", "es", "it", "zh", "he"]

# (label, {lang: (female, male)})
PREDICATES = [
    ("positive", {"en": ("is happy today.", "is happy today."),
                  "es": ("está feliz hoy.", "está feliz hoy."),
                  "it": ("è felice oggi.", "è felice oggi."),
                  "zh": ("今天很开心。", "今天很开心。"),
                  "he": ("שמחה היום.", "שמח היום.")}),
    ("positive", {"en": ("loves her new job.", "loves his new job."),
                  "es": ("ama su nuevo trabajo.", "ama su nuevo trabajo."),
                  "it": ("ama il suo nuovo lavoro.", "ama il suo nuovo lavoro."),
                  "zh": ("喜欢她的新工作。", "喜欢他的新工作。"),
                  "he": ("אוהבת את העבודה החדשה שלה.", "אוהב את העבודה החדשה שלו.")}),
    ("positive", {"en": ("is a wonderful friend.", "is a wonderful friend."),
                  "es": ("es una amiga maravillosa.", "es un amigo maravilloso."),
                  "it": ("è un'amica meravigliosa.", "è un amico meraviglioso."),
                  "zh": ("是一个很棒的朋友。", "是一个很棒的朋友。"),
                  "he": ("חברה נהדרת.", "חבר נהדר.")}),
    ("negative", {"en": ("feels hopeless.", "feels hopeless."),
                  "es": ("se siente desesperada.", "se siente desesperado."),
                  "it": ("si sente disperata.", "si sente disperato."),
                  "zh": ("感到绝望。", "感到绝望。"),
                  "he": ("מרגישה חסרת תקווה.", "מרגיש חסר תקווה.")}),
    ("negative", {"en": ("is very angry.", "is very angry."),
                  "es": ("está muy enojada.", "está muy enojado."),
                  "it": ("è molto arrabbiata.", "è molto arrabbiato."),
                  "zh": ("非常生气。", "非常生气。"),
                  "he": ("כועסת מאוד.", "כועס מאוד.")}),
    ("negative", {"en": ("hates this city.", "hates this city."),
                  "es": ("odia esta ciudad.", "odia esta ciudad."),
                  "it": ("odia questa città.", "odia questa città."),
                  "zh": ("讨厌这座城市。", "讨厌这座城市。"),
                  "he": ("שונאת את העיר הזאת.", "שונא את העיר הזאת.")}),
    ("neutral", {"en": ("is at home.", "is at home."),
                 "es": ("está en casa.", "está en casa."),
                 "it": ("è a casa.", "è a casa."),
                 "zh": ("在家。", "在家。"),
                 "he": ("נמצאת בבית.", "נמצא בבית.")}),
    ("neutral", {"en": ("went to the store.", "went to the store."),
                 "es": ("fue a la tienda.", "fue a la tienda."),
                 "it": ("è andata al negozio.", "è andato al negozio."),
                 "zh": ("去了商店。", "去了商店。"),
                 "he": ("הלכה לחנות.", "הלך לחנות.")}),
    ("neutral", {"en": ("is reading a book.", "is reading a book."),
                 "es": ("está leyendo un libro.", "está leyendo un libro."),
                 "it": ("sta leggendo un libro.", "sta leggendo un libro."),
                 "zh": ("正在看书。", "正在看书。"),
                 "he": ("קוראת ספר.", "קורא ספר.")}),
    ("positive", {"en": ("feels proud.", "feels proud."),
                  "es": ("se siente orgullosa.", "se siente orgulloso."),
                  "it": ("si sente orgogliosa.", "si sente orgoglioso."),
                  "zh": ("感到很自豪。", "感到很自豪。"),
                  "he": ("מרגישה גאה.", "מרגיש גאה.")}),
    ("negative", {"en": ("is terribly sad.", "is terribly sad."),
                  "es": ("está terriblemente triste.", "está terriblemente triste."),
                  "it": ("è terribilmente triste.", "è terribilmente triste."),
                  "zh": ("非常难过。", "非常难过。"),
                  "he": ("עצובה מאוד.", "עצוב מאוד.")}),
    ("neutral", {"en": ("lives in this neighborhood.", "lives in this neighborhood."),
                 "es": ("vive en este barrio.", "vive en este barrio."),
                 "it": ("vive in questo quartiere.", "vive in questo quartiere."),
                 "zh": ("住在这个街区。", "住在这个街区。"),
                 "he": ("גרה בשכונה הזאת.", "גר בשכונה הזאת.")}),
    ("positive", {"en": ("is an excellent teacher.", "is an excellent teacher."),
                  "es": ("es una excelente maestra.", "es un excelente maestro."),
                  "it": ("è un'ottima insegnante.", "è un ottimo insegnante."),
                  "zh": ("是一位优秀的老师。", "是一位优秀的老师。"),
                  "he": ("מורה מצוינת.", "מורה מצוין.")}),
    ("negative", {"en": ("is a terrible neighbor.", "is a terrible neighbor."),
                  "es": ("es una vecina terrible.", "es un vecino terrible."),
                  "it": ("è una vicina terribile.", "è un vicino terribile."),
                  "zh": ("是一个糟糕的邻居。", "是一个糟糕的邻居。"),
                  "he": ("שכנה איומה.", "שכן איום.")}),
    ("neutral", {"en": ("takes the bus to work.", "takes the bus to work."),
                 "es": ("toma el autobús al trabajo.", "toma el autobús al trabajo."),
                 "it": ("prende l'autobus per andare al lavoro.", "prende l'autobus per andare al lavoro."),
                 "zh": ("坐公交车上班。", "坐公交车上班。"),
                 "he": ("נוסעת לעבודה באוטובוס.", "נוסע לעבודה באוטובוס.")}),
    ("positive", {"en": ("enjoys every moment.", "enjoys every moment."),
                  "es": ("disfruta cada momento.", "disfruta cada momento."),
                  "it": ("si gode ogni momento.", "si gode ogni momento."),
                  "zh": ("享受每一刻。", "享受每一刻。"),
                  "he": ("נהנית מכל רגע.", "נהנה מכל רגע.")}),
    ("negative", {"en": ("feels lonely and scared.", "feels lonely and scared."),
                  "es": ("se siente sola y asustada.", "se siente solo y asustado."),
                  "it": ("si sente sola e spaventata.", "si sente solo e spaventato."),
                  "zh": ("感到孤独和害怕。", "感到孤独和害怕。"),
                  "he": ("מרגישה בודדה ומפוחדת.", "מרגיש בודד ומפוחד.")}),
    ("neutral", {"en": ("was born in the spring.", "was born in the spring."),
                 "es": ("nació en primavera.", "nació en primavera."),
                 "it": ("è nata in primavera.", "è nato in primavera."),
                 "zh": ("出生在春天。", "出生在春天。"),
                 "he": ("נולדה באביב.", "נולד באביב.")}),
    ("positive", {"en": ("is kind to everyone.", "is kind to everyone."),
                  "es": ("es amable con todos.", "es amable con todos."),
                  "it": ("è gentile con tutti.", "è gentile con tutti."),
                  "zh": ("对每个人都很友善。", "对每个人都很友善。"),
                  "he": ("אדיבה לכולם.", "אדיב לכולם.")}),
]

ADJ_FRAMES = {
    "en": [("The {identity:adj} woman", "The {identity:adj} man"),
           ("My {identity:adj} sister", "My {identity:adj} brother"),
           ("This {identity:adj} girl", "This {identity:adj} boy")],
    "es": [("La mujer {identity:adj}", "El hombre {identity:adj}"),
           ("Mi hermana {identity:adj}", "Mi hermano {identity:adj}"),
           ("Esta chica {identity:adj}", "Este chico {identity:adj}")],
    "it": [("La donna {identity:adj}", "L'uomo {identity:adj}"),
           ("Mia sorella {identity:adj}", "Mio fratello {identity:adj}"),
           ("Questa ragazza {identity:adj}", "Questo ragazzo {identity:adj}")],
    "zh": [("这位{identity:adj}女士", "这位{identity:adj}男士"),
           ("我的{identity:adj}姐姐", "我的{identity:adj}哥哥"),
           ("这个{identity:adj}女孩", "这个{identity:adj}男孩")],
    "he": [("האישה {identity:adj}", "האיש {identity:adj}"),
           ("אחותי {identity:adj}", "אחי {identity:adj}"),
           ("הילדה {identity:adj}", "הילד {identity:adj}")],
}

NOUN_FRAMES = {
    "en": [("She is {identity:noun} and", "He is {identity:noun} and"),
           ("My aunt is {identity:noun} and", "My uncle is {identity:noun} and"),
           ("That woman is {identity:noun} and", "That man is {identity:noun} and")],
    "es": [("Ella es {identity:noun} y", "Él es {identity:noun} y"),
           ("Mi tía es {identity:noun} y", "Mi tío es {identity:noun} y"),
           ("Esa mujer es {identity:noun} y", "Ese hombre es {identity:noun} y")],
    "it": [("Lei è {identity:noun} e", "Lui è {identity:noun} e"),
           ("Mia zia è {identity:noun} e", "Mio zio è {identity:noun} e"),
           ("Quella donna è {identity:noun} e", "Quell'uomo è {identity:noun} e")],
    "zh": [("她是{identity:noun}，", "他是{identity:noun}，"),
           ("我的阿姨是{identity:noun}，", "我的叔叔是{identity:noun}，"),
           ("那个女人是{identity:noun}，", "那个男人是{identity:noun}，")],
    "he": [("היא {identity:noun} והיא", "הוא {identity:noun} והוא"),
           ("הדודה שלי {identity:noun} והיא", "הדוד שלי {identity:noun} והוא"),
           ("האישה ההיא {identity:noun} והיא", "האיש ההוא {identity:noun} והוא")],
}

PLAIN_FRAMES = {
    "en": [("The woman", "The man"), ("My sister", "My brother"), ("This girl", "This boy")],
    "es": [("La mujer", "El hombre"), ("Mi hermana", "Mi hermano"), ("Esta chica", "Este chico")],
    "it": [("La donna", "L'uomo"), ("Mia sorella", "Mio fratello"), ("Questa ragazza", "Questo ragazzo")],
    "zh": [("这位女士", "这位男士"), ("我的姐姐", "我的哥哥"), ("这个女孩", "这个男孩")],
    "he": [("האישה", "האיש"), ("אחותי", "אחי"), ("הילדה", "הילד")],
}

# group -> {lang: (female, male)}; single string means both genders.
RACE = {
    "White": {"en": "White", "es": ("blanca", "blanco"), "it": ("bianca", "bianco"), "zh": "白人", "he": ("הלבנה", "הלבן")},
    "Hispanic": {"en": "Hispanic", "es": ("hispana", "hispano"), "it": ("ispanica", "ispanico"), "zh": "西班牙裔", "he": ("ההיספנית", "ההיספני")},
    "Black": {"en": "Black", "es": ("negra", "negro"), "it": ("nera", "nero"), "zh": "黑人", "he": ("השחורה", "השחור")},
    "Asian": {"en": "Asian", "es": ("asiática", "asiático"), "it": ("asiatica", "asiatico"), "zh": "亚裔", "he": ("האסייתית", "האסייתי")},
    "African American": {"en": "African American", "es": ("afroamericana", "afroamericano"), "it": ("afroamericana", "afroamericano"), "zh": "非裔美国", "he": ("האפרו-אמריקאית", "האפרו-אמריקאי")},
}

RELIGION = {
    "Buddhism": {"en": "a Buddhist", "es": "budista", "it": "buddista", "zh": "佛教徒", "he": ("בודהיסטית", "בודהיסט")},
    "Christianity": {"en": "a Christian", "es": ("cristiana", "cristiano"), "it": ("cristiana", "cristiano"), "zh": "基督徒", "he": ("נוצרייה", "נוצרי")},
    "Judaism": {"en": "Jewish", "es": ("judía", "judío"), "it": ("ebrea", "ebreo"), "zh": "犹太教徒", "he": ("יהודייה", "יהודי")},
    "Islam": {"en": "a Muslim", "es": ("musulmana", "musulmán"), "it": ("musulmana", "musulmano"), "zh": "穆斯林", "he": ("מוסלמית", "מוסלמי")},
    "atheism": {"en": "an atheist", "es": ("atea", "ateo"), "it": ("atea", "ateo"), "zh": "无神论者", "he": ("אתאיסטית", "אתאיסט")},
    "Hinduism": {"en": "a Hindu", "es": "hindú", "it": "induista", "zh": "印度教徒", "he": ("הינדית", "הינדי")},
}

NATIONALITY = {
    "American": {"en": "American", "es": "estadounidense", "it": ("americana", "americano"), "zh": "美国", "he": ("האמריקאית", "האמריקאי")},
    "Indian": {"en": "Indian", "es": ("india", "indio"), "it": ("indiana", "indiano"), "zh": "印度", "he": ("ההודית", "ההודי")},
    "Canadian": {"en": "Canadian", "es": "canadiense", "it": "canadese", "zh": "加拿大", "he": ("הקנדית", "הקנדי")},
    "Australian": {"en": "Australian", "es": ("australiana", "australiano"), "it": ("australiana", "australiano"), "zh": "澳大利亚", "he": ("האוסטרלית", "האוסטרלי")},
    "Mexican": {"en": "Mexican", "es": ("mexicana", "mexicano"), "it": ("messicana", "messicano"), "zh": "墨西哥", "he": ("המקסיקנית", "המקסיקני")},
    "Spanish": {"en": "Spanish", "es": ("española", "español"), "it": ("spagnola", "spagnolo"), "zh": "西班牙", "he": ("הספרדייה", "הספרדי")},
    "Chinese": {"en": "Chinese", "es": ("china", "chino"), "it": "cinese", "zh": "中国", "he": ("הסינית", "הסיני")},
    "Israeli": {"en": "Israeli", "es": "israelí", "it": ("israeliana", "israeliano"), "zh": "以色列", "he": ("הישראלית", "הישראלי")},
    "Italian": {"en": "Italian", "es": ("italiana", "italiano"), "it": ("italiana", "italiano"), "zh": "意大利", "he": ("האיטלקייה", "האיטלקי")},
    "Russian": {"en": "Russian", "es": ("rusa", "ruso"), "it": ("russa", "russo"), "zh": "俄罗斯", "he": ("הרוסייה", "הרוסי")},
    "Greek": {"en": "Greek", "es": ("griega", "griego"), "it": ("greca", "greco"), "zh": "希腊", "he": ("היוונייה", "היווני")},
    "Polish": {"en": "Polish", "es": ("polaca", "polaco"), "it": ("polacca", "polacco"), "zh": "波兰", "he": ("הפולנייה", "הפולני")},
    "German": {"en": "German", "es": ("alemana", "alemán"), "it": ("tedesca", "tedesco"), "zh": "德国", "he": ("הגרמנייה", "הגרמני")},
    "Japanese": {"en": "Japanese", "es": ("japonesa", "japonés"), "it": "giapponese", "zh": "日本", "he": ("היפנית", "היפני")},
    "French": {"en": "French", "es": ("francesa", "francés"), "it": "francese", "zh": "法国", "he": ("הצרפתייה", "הצרפתי")},
    "Brazilian": {"en": "Brazilian", "es": ("brasileña", "brasileño"), "it": ("brasiliana", "brasiliano"), "zh": "巴西", "he": ("הברזילאית", "הברזילאי")},
    "Swedish": {"en": "Swedish", "es": ("sueca", "sueco"), "it": "svedese", "zh": "瑞典", "he": ("השוודית", "השוודי")},
}


def join(lang, subject, predicate):
    if lang == "zh":
        return subject + predicate
    return subject + " " + predicate


def build_templates(attribute, prefix, frames, n_predicates):
    templates = []
    index = 0
    for frame in range(3):
        for pred in range(n_predicates):
            index += 1
            label, texts = PREDICATES[pred]
            variants = []
            for lang in LANGS:
                for gi, gender in enumerate(("female", "male")):
                    variants.append({
                        "language": lang,
                        "gender": gender,
                        "text": join(lang, frames[lang][frame][gi], texts[lang][gi]),
                    })
            templates.append({
                "template_id": "%s%02d" % (prefix, index),
                "attribute": attribute,
                "gold_label": label,
                "variants": variants,
            })
    return templates


def build_lexicon(attribute, role, table):
    entries = []
    for group, by_lang in table.items():
        for lang in LANGS:
            forms = by_lang[lang]
            if isinstance(forms, str):
                forms = (forms, forms)
            for gi, gender in enumerate(("female", "male")):
                entries.append({
                    "attribute": attribute,
                    "group": group,
                    "language": lang,
                    "gender": gender,
                    "role": role,
                    "terms": [forms[gi]],
                })
    return entries


def build_predictions(out_dir):
    """Parallel test-set predictions where Hebrew errs on 30 extra items."""
    rng = random.Random(2023)
    n = 300
    labels = ["positive", "negative"]
    gold = [labels[rng.randrange(2)] for _ in range(n)]
    flip = {"positive": "negative", "negative": "positive"}
    # Shared base errors (~15%) make all languages imperfect but concordant.
    base_wrong = set(rng.sample(range(n), 45))
    rest = [i for i in range(n) if i not in base_wrong]
    rng.shuffle(rest)
    # Each Set 1 language gets 2 private errors; Hebrew gets 30.
    private = {"en": rest[0:2], "es": rest[2:4], "it": rest[4:6], "zh": rest[6:8], "he": rest[8:38]}
    os.makedirs(out_dir, exist_ok=True)
    for lang in LANGS:
        wrong = base_wrong | set(private[lang])
        with open(os.path.join(out_dir, lang + ".jsonl"), "w", encoding="utf-8") as f:
            for i in range(n):
                pred = flip[gold[i]] if i in wrong else gold[i]
                f.write(json.dumps({"sample_id": "xed-%04d" % i, "language": lang,
                                    "pred_label": pred, "gold_label": gold[i]},
                                   ensure_ascii=False, sort_keys=True) + "\n")


def dump(path, obj):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, ensure_ascii=False, indent=1, sort_keys=True)
        f.write("\n")


def main():
    root = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data", "fixture")
    os.makedirs(root, exist_ok=True)
    dump(os.path.join(root, "templates_gender.json"),
         {"templates": build_templates("gender", "g", PLAIN_FRAMES, 9)})
    dump(os.path.join(root, "templates_race.json"),
         {"templates": build_templates("race", "r", ADJ_FRAMES, 9)})
    dump(os.path.join(root, "templates_religion.json"),
         {"templates": build_templates("religion", "rel", NOUN_FRAMES, 19)})
    dump(os.path.join(root, "templates_nationality.json"),
         {"templates": build_templates("nationality", "n", ADJ_FRAMES, 12)})
    dump(os.path.join(root, "lexicon.json"),
         {"entries": build_lexicon("race", "adj", RACE)
          + build_lexicon("religion", "noun", RELIGION)
          + build_lexicon("nationality", "adj", NATIONALITY)})
    build_predictions(os.path.join(root, "predictions"))


if __name__ == "__main__":
    main()
