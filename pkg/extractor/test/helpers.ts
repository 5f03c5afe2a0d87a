import * as fs from 'node:fs'
import * as path from 'node:path'

import { encodePng, RgbImage } from '../src/png.js'

/** Tiny deterministic PRNG so fixtures are stable across runs. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a = (a + 0x6d2b79f5) >>> 0
    let t = a
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

/** Smooth blue-ish gradients: the "sky" domain. */
export function skyImage(seed: number, size = 48): RgbImage {
  const rand = mulberry32(seed)
  const pixels = new Float64Array(size * size * 3)
  const base = 120 + rand() * 60
  const tilt = rand() * 0.8
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const i = (y * size + x) * 3
      const g = base + tilt * y + (rand() - 0.5) * 6
      pixels[i] = g * 0.35
      pixels[i + 1] = g * 0.55
      pixels[i + 2] = Math.min(255, g + 60)
    }
  }
  return { width: size, height: size, pixels }
}

/** High-frequency red/orange texture: the "lava" domain. */
export function lavaImage(seed: number, size = 48): RgbImage {
  const rand = mulberry32(seed)
  const pixels = new Float64Array(size * size * 3)
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const i = (y * size + x) * 3
      const spike = rand() < 0.5 ? 40 : 220
      pixels[i] = Math.min(255, spike + rand() * 35)
      pixels[i + 1] = spike * 0.3 + rand() * 30
      pixels[i + 2] = rand() * 25
    }
  }
  return { width: size, height: size, pixels }
}

export function writeImageFolder(
  dir: string,
  maker: (seed: number) => RgbImage,
  count: number,
): void {
  fs.mkdirSync(dir, { recursive: true })
  for (let i = 0; i < count; i++) {
    fs.writeFileSync(path.join(dir, `img_${String(i).padStart(3, '0')}.png`),
      encodePng(maker(i)))
  }
}
