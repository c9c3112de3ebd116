export interface Segment {
  text: string;
  highlight: boolean;
}

/** Split window text into plain and highlighted segments around the
 *  keyword span reported by the server. */
export function segmentText(
  text: string,
  start: number,
  end: number,
): Segment[] {
  const lo = Math.max(0, Math.min(start, text.length));
  const hi = Math.max(lo, Math.min(end, text.length));
  const segments: Segment[] = [];
  if (lo > 0) segments.push({ text: text.slice(0, lo), highlight: false });
  if (hi > lo) segments.push({ text: text.slice(lo, hi), highlight: true });
  if (hi < text.length) {
    segments.push({ text: text.slice(hi), highlight: false });
  }
  return segments.length ? segments : [{ text, highlight: false }];
}

/** Validate a regex locally before bothering the server. Returns an error
 *  message or null when the pattern compiles. */
export function regexProblem(source: string): string | null {
  if (!source) return 'pattern is empty';
  try {
    new RegExp(source);
    return null;
  } catch (err) {
    return err instanceof Error ? err.message : String(err);
  }
}
