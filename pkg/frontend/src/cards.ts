/** View model for one queued pair: every attribute present in either
 * record, in left-record order with right-only names appended. */

import type { QueueItem } from "./api";
import { diffTokens, type DiffToken } from "./diff";

export const EMPTY_TEXT = "(empty)";

export interface CardRow {
  name: string;
  left: string;
  right: string;
  leftTokens: DiffToken[];
  rightTokens: DiffToken[];
  differs: boolean;
}

export interface PairCard {
  pairId: string;
  position: number;
  rows: CardRow[];
}

export function buildCard(item: QueueItem): PairCard {
  const left = new Map(item.left);
  const right = new Map(item.right);
  const names: string[] = [];
  for (const [name] of item.left) names.push(name);
  for (const [name] of item.right) {
    if (!left.has(name)) names.push(name);
  }
  const rows = names.map((name) => {
    const lv = left.get(name) ?? "";
    const rv = right.get(name) ?? "";
    const [leftTokens, rightTokens] = diffTokens(lv, rv);
    return {
      name,
      left: lv,
      right: rv,
      leftTokens,
      rightTokens,
      differs: lv !== rv,
    };
  });
  return { pairId: item.pair_id, position: item.position, rows };
}

/** Display form of a cell value; empty is stated, never blank. */
export function cellText(value: string): string {
  return value === "" ? EMPTY_TEXT : value;
}
