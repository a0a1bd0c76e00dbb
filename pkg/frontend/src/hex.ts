// Hex-view helpers for the adversary pane.

export function hexByte(n: number): string {
  return n.toString(16).padStart(2, "0");
}

export function hexToBytes(hex: string): number[] {
  const out: number[] = [];
  for (let i = 0; i + 1 < hex.length; i += 2) {
    out.push(parseInt(hex.slice(i, i + 2), 16));
  }
  return out;
}

export function isPrintable(byte: number): boolean {
  return byte >= 0x20 && byte < 0x7f;
}

/** Classic 16-per-row hex dump with an ASCII gutter. */
export function hexDump(hex: string, width = 16): string {
  const bytes = hexToBytes(hex);
  const rows: string[] = [];
  for (let off = 0; off < bytes.length; off += width) {
    const row = bytes.slice(off, off + width);
    const hexCol = row.map(hexByte).join(" ").padEnd(width * 3 - 1, " ");
    const ascii = row.map((b) => (isPrintable(b) ? String.fromCharCode(b) : ".")).join("");
    rows.push(`${off.toString(16).padStart(4, "0")}  ${hexCol}  ${ascii}`);
  }
  return rows.join("\n");
}
