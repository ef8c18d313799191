// Deterministic agent colors: hash of the agent index, not a palette
// rotation, so the same agent is the same color in every screenshot and
// on every machine regardless of how many agents are shown.

/** 32-bit avalanche hash (fmix step of murmur3). */
function mix32(n: number): number {
  let h = n >>> 0;
  h ^= h >>> 16;
  h = Math.imul(h, 0x85ebca6b);
  h ^= h >>> 13;
  h = Math.imul(h, 0xc2b2ae35);
  h ^= h >>> 16;
  return h >>> 0;
}

export function agentHue(index: number): number {
  return mix32(index) % 360;
}

export function agentColor(index: number): string {
  return `hsl(${agentHue(index)}, 72%, 48%)`;
}
