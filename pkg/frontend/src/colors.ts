/** Stable community colors: hash the node id, not its position in any list,
 * so edits to other nodes never reshuffle existing colors. */

export function hashId(id: number): number {
  // splitmix-style avalanche over the 32-bit id
  let x = (id | 0) + 0x9e3779b9;
  x = Math.imul(x ^ (x >>> 16), 0x85ebca6b);
  x = Math.imul(x ^ (x >>> 13), 0xc2b2ae35);
  x ^= x >>> 16;
  return x >>> 0;
}

export function colorFor(id: number): string {
  const h = hashId(id);
  const hue = h % 360;
  const sat = 55 + ((h >>> 9) % 30);
  const light = 45 + ((h >>> 17) % 15);
  return `hsl(${hue}, ${sat}%, ${light}%)`;
}

export function dimmed(color: string): string {
  return color.replace("hsl(", "hsla(").replace(")", ", 0.15)");
}
