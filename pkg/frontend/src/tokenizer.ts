/** Sentencepiece-style subword pieces: "▁" marks a word start. */

const WORD_MARK = "▁";
const MAX_PIECE = 6;

export interface Piece {
  text: string; // includes the word mark on word-initial pieces
  word: string; // the whole word this piece came from
  wordIndex: number;
}

export function tokenize(text: string): Piece[] {
  const pieces: Piece[] = [];
  const words = text.split(/\s+/).filter((w) => w.length > 0);
  words.forEach((word, wordIndex) => {
    for (let i = 0; i < word.length; i += MAX_PIECE) {
      const chunk = word.slice(i, i + MAX_PIECE);
      pieces.push({
        text: i === 0 ? WORD_MARK + chunk : chunk,
        word,
        wordIndex,
      });
    }
  });
  return pieces;
}

export function detokenize(pieces: string[]): string {
  let out = "";
  for (const piece of pieces) {
    if (piece.startsWith(WORD_MARK)) {
      out += (out.length > 0 ? " " : "") + piece.slice(WORD_MARK.length);
    } else {
      out += piece;
    }
  }
  return out;
}
