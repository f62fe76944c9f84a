/// Embedded lexicon: 200 words, 33 or 34 per length from 3 to 8 letters.
pub const WORDS: [&str; 200] = [
    "AIR", "ACE", "AGE", "ARM", "ART", "BAG", "BED", "BOX", "CAT", "CUP", "DAY", "DOG", "EAR",
    "EGG", "EYE", "FAN", "FIG", "FOX", "GUM", "HAT", "ICE", "INK", "JAR", "KEY", "LOG", "MAP",
    "NET", "OWL", "PEN", "RUG", "SUN", "TOY", "VAN", "WEB", //
    "PAIN", "AREA", "ARCH", "BIRD", "BOAT", "CAKE", "COIN", "DESK", "DOOR", "DRUM", "FARM",
    "FISH", "FORM", "FROM", "GATE", "GOLD", "HAND", "JUMP", "KING", "LAMP", "MILK", "MOON",
    "NEST", "PARK", "QUIZ", "RAIN", "ROAD", "SHIP", "TREE", "WIND", "WOLF", "YARD", "ZERO", //
    "APPLE", "ANGER", "ANGLE", "AWARD", "BEACH", "BREAD", "CHAIR", "CLOUD", "DANCE", "DREAM",
    "EARTH", "FIELD", "FLAME", "GHOST", "GRAPE", "HEART", "HORSE", "JUICE", "KNIFE", "LEMON",
    "MONEY", "NIGHT", "OCEAN", "PIANO", "QUEEN", "RANGE", "RIVER", "SNAKE", "TABLE", "TIGER",
    "VOICE", "WATER", "YOUTH", //
    "SQUARE", "ANIMAL", "ANCHOR", "ARTIST", "BASKET", "BRIDGE", "CASTLE", "CIRCLE", "DOCTOR",
    "ENGINE", "FLOWER", "FOREST", "GARDEN", "HAMMER", "ISLAND", "JACKET", "KITTEN", "LADDER",
    "MARKET", "NUMBER", "ORANGE", "PENCIL", "PLANET", "RABBIT", "SCHOOL", "SILVER", "SUMMER",
    "TICKET", "TURTLE", "VALLEY", "WINDOW", "WINTER", "YELLOW", //
    "AIRPORT", "ANTENNA", "BALANCE", "BATTERY", "BLANKET", "CABINET", "CAPTAIN", "CHICKEN",
    "COUNTRY", "CRYSTAL", "DIAMOND", "DOLPHIN", "EVENING", "FEATHER", "FREEDOM", "GRAVITY",
    "HARVEST", "HOLIDAY", "JOURNEY", "KITCHEN", "LIBRARY", "MACHINE", "MONSTER", "MORNING",
    "NETWORK", "OCTOPUS", "PICTURE", "PYRAMID", "RAINBOW", "TEACHER", "THUNDER", "VILLAGE",
    "WEATHER", //
    "ALPHABET", "AIRPLANE", "ANTELOPE", "BASEBALL", "BIRTHDAY", "BUILDING", "CALENDAR",
    "CHAMPION", "CHILDREN", "COMPUTER", "DAUGHTER", "DINOSAUR", "ELEPHANT", "EXERCISE",
    "FOOTBALL", "FRIENDLY", "GRATEFUL", "HOSPITAL", "KANGAROO", "LANGUAGE", "MEDICINE",
    "MOUNTAIN", "NOTEBOOK", "ORDINARY", "PAINTING", "QUESTION", "SANDWICH", "SHOULDER",
    "SQUIRREL", "STRENGTH", "TOMORROW", "UMBRELLA", "VACATION", "YOURSELF",
];

/// Five symbols whose 25 ordered pairs form the default bigram list.
pub const BIGRAM_LETTERS: [char; 5] = ['A', 'E', 'N', 'R', 'T'];

pub fn default_bigrams() -> Vec<String> {
    BIGRAM_LETTERS
        .iter()
        .flat_map(|&a| BIGRAM_LETTERS.iter().map(move |&b| format!("{a}{b}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn lexicon_shape() {
        let set: HashSet<_> = WORDS.iter().collect();
        assert_eq!(set.len(), 200);
        for w in WORDS {
            assert!((3..=8).contains(&w.len()), "{w}");
            assert!(w.chars().all(|c| c.is_ascii_uppercase()), "{w}");
        }
        for len in 3..=8 {
            let n = WORDS.iter().filter(|w| w.len() == len).count();
            assert!((33..=34).contains(&n), "length {len}: {n}");
        }
        for probe in ["AIR", "PAIN", "SQUARE"] {
            assert!(WORDS.contains(&probe));
        }
    }

    #[test]
    fn bigrams() {
        let b = default_bigrams();
        assert_eq!(b.len(), 25);
        assert_eq!(b[0], "AA");
        assert_eq!(b[24], "TT");
    }
}
