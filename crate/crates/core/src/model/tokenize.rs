/// Lowercase `text` and split it into word and punctuation tokens.
///
/// Whitespace separates chunks. Inside a chunk, runs of alphanumeric
/// characters form a word; an apostrophe or hyphen stays inside a word when
/// it sits between two alphanumeric characters (`don't`, `well-known`).
/// Every other character becomes a token on its own.
///
/// The same function tokenizes language-model training text, unigram counts
/// and test sentences, so sentence length is always measured in these tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().flat_map(char::to_lowercase).collect();
        let mut word = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if c.is_alphanumeric() {
                word.push(c);
                continue;
            }
            let joiner = (c == '\'' || c == '-')
                && !word.is_empty()
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
            if joiner {
                word.push(c);
                continue;
            }
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            out.push(c.to_string());
        }
        if !word.is_empty() {
            out.push(word);
        }
    }
    out
}

/// Join tokens with single spaces. `tokenize(detokenize(t)) == t` for any
/// token list produced by [`tokenize`].
pub fn detokenize(tokens: &[String]) -> String {
    tokens.join(" ")
}
