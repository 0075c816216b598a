/** Token-level difference marking for a side-by-side attribute row. */

export interface DiffToken {
  text: string;
  changed: boolean;
}

export function tokenize(value: string): string[] {
  return value.split(/\s+/).filter((t) => t.length > 0);
}

/** Longest common subsequence over token arrays; tokens outside the LCS are
 * marked changed on their own side. Comparison is exact, so "QT-4410" vs
 * "QT4410" highlights — that is the difference an annotator must notice. */
export function diffTokens(left: string, right: string): [DiffToken[], DiffToken[]] {
  const a = tokenize(left);
  const b = tokenize(right);
  const n = a.length;
  const m = b.length;
  const lcs: number[][] = Array.from({ length: n + 1 }, () => new Array(m + 1).fill(0));
  for (let i = n - 1; i >= 0; i--) {
    for (let j = m - 1; j >= 0; j--) {
      lcs[i][j] = a[i] === b[j] ? lcs[i + 1][j + 1] + 1 : Math.max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  const leftOut: DiffToken[] = [];
  const rightOut: DiffToken[] = [];
  let i = 0;
  let j = 0;
  while (i < n && j < m) {
    if (a[i] === b[j]) {
      leftOut.push({ text: a[i], changed: false });
      rightOut.push({ text: b[j], changed: false });
      i++;
      j++;
    } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
      leftOut.push({ text: a[i], changed: true });
      i++;
    } else {
      rightOut.push({ text: b[j], changed: true });
      j++;
    }
  }
  for (; i < n; i++) leftOut.push({ text: a[i], changed: true });
  for (; j < m; j++) rightOut.push({ text: b[j], changed: true });
  return [leftOut, rightOut];
}
