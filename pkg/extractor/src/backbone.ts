/**
 * Deterministic image embeddings.
 *
 * The builtin `patch-stats-v1` backbone resizes the image bilinearly to a
 * square, then emits per-cell color means, luminance spread, and gradient
 * energy over a 4x4 grid plus global channel statistics. It is not learned,
 * but it is stable byte-for-byte and separates visually distinct domains,
 * which is what the feature files feeding the domain filter need. Real
 * (pretrained) backbones are external dependencies: implement EmbedFn
 * against your runtime of choice and pass it to extract().
 */

import { RgbImage } from './png.js'

export type EmbedFn = (img: RgbImage) => Float64Array

export interface Backbone {
  id: string
  dim: number
  embed: EmbedFn
}

const GRID = 4

export function resizeBilinear(img: RgbImage, size: number): Float64Array {
  const out = new Float64Array(size * size * 3)
  const sx = img.width / size
  const sy = img.height / size
  for (let y = 0; y < size; y++) {
    const fy = Math.min((y + 0.5) * sy - 0.5, img.height - 1)
    const y0 = Math.max(0, Math.floor(fy))
    const y1 = Math.min(img.height - 1, y0 + 1)
    const wy = Math.max(0, fy - y0)
    for (let x = 0; x < size; x++) {
      const fx = Math.min((x + 0.5) * sx - 0.5, img.width - 1)
      const x0 = Math.max(0, Math.floor(fx))
      const x1 = Math.min(img.width - 1, x0 + 1)
      const wx = Math.max(0, fx - x0)
      for (let c = 0; c < 3; c++) {
        const p00 = img.pixels[(y0 * img.width + x0) * 3 + c]
        const p01 = img.pixels[(y0 * img.width + x1) * 3 + c]
        const p10 = img.pixels[(y1 * img.width + x0) * 3 + c]
        const p11 = img.pixels[(y1 * img.width + x1) * 3 + c]
        const top = p00 + (p01 - p00) * wx
        const bot = p10 + (p11 - p10) * wx
        out[(y * size + x) * 3 + c] = (top + (bot - top) * wy) / 255
      }
    }
  }
  return out
}

function patchStats(img: RgbImage, size: number): Float64Array {
  const rgb = resizeBilinear(img, size)
  const n = size * size
  const lum = new Float64Array(n)
  for (let i = 0; i < n; i++) {
    lum[i] = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2]
  }

  const cell = size / GRID
  const features: number[] = []
  for (let gy = 0; gy < GRID; gy++) {
    for (let gx = 0; gx < GRID; gx++) {
      let sum = [0, 0, 0]
      let lumSum = 0
      let lumSq = 0
      let grad = 0
      let gradCount = 0
      for (let y = gy * cell; y < (gy + 1) * cell; y++) {
        for (let x = gx * cell; x < (gx + 1) * cell; x++) {
          const i = y * size + x
          for (let c = 0; c < 3; c++) sum[c] += rgb[3 * i + c]
          lumSum += lum[i]
          lumSq += lum[i] * lum[i]
          if (x + 1 < (gx + 1) * cell) {
            grad += Math.abs(lum[i + 1] - lum[i])
            gradCount++
          }
          if (y + 1 < (gy + 1) * cell) {
            grad += Math.abs(lum[i + size] - lum[i])
            gradCount++
          }
        }
      }
      const m = cell * cell
      const lumMean = lumSum / m
      const lumVar = Math.max(0, lumSq / m - lumMean * lumMean)
      features.push(sum[0] / m, sum[1] / m, sum[2] / m)
      features.push(Math.sqrt(lumVar))
      features.push(gradCount ? grad / gradCount : 0)
    }
  }
  // Global per-channel mean and spread.
  for (let c = 0; c < 3; c++) {
    let s = 0
    let sq = 0
    for (let i = 0; i < n; i++) {
      s += rgb[3 * i + c]
      sq += rgb[3 * i + c] * rgb[3 * i + c]
    }
    const mean = s / n
    features.push(mean, Math.sqrt(Math.max(0, sq / n - mean * mean)))
  }
  return Float64Array.from(features)
}

export function makeBackbone(id: string, imageSize: number): Backbone {
  if (imageSize < GRID || imageSize % GRID !== 0) {
    throw new Error(`image size must be a positive multiple of ${GRID}, got ${imageSize}`)
  }
  if (id === 'patch-stats-v1') {
    return {
      id,
      dim: GRID * GRID * 5 + 6,
      embed: (img) => patchStats(img, imageSize),
    }
  }
  throw new Error(
    `unknown backbone '${id}' (builtin: patch-stats-v1; pretrained models ` +
    `are external dependencies wired in via the EmbedFn interface)`,
  )
}
