/**
 * Folder-to-OODF extraction: decode every image in a directory (sorted
 * path order), embed each with the configured backbone, optionally apply a
 * linear head for logits, and write one OODF v1 file with a provenance
 * sidecar. Unreadable images are skipped with a warning and recorded in the
 * sidecar; an empty result is a hard error.
 */

import * as fs from 'node:fs'
import * as path from 'node:path'

import { Backbone, makeBackbone } from './backbone.js'
import { decodePng } from './png.js'
import { writeFeatureFile } from './oodf.js'

export interface ExtractConfig {
  inputDir: string
  backbone?: string
  imageSize?: number
  batchSize?: number
  output: string
  /** Optional JSON file: {"weights": C x D, "bias": [C]} for logits. */
  headWeightsPath?: string
}

export interface ExtractResult {
  output: string
  digest: string
  nRows: number
  featDim: number
  skipped: string[]
}

interface Head {
  weights: number[][]
  bias: number[]
}

function loadHead(p: string, featDim: number): Head {
  const head = JSON.parse(fs.readFileSync(p, 'utf-8')) as Head
  if (!Array.isArray(head.weights) || !Array.isArray(head.bias)) {
    throw new Error(`head file ${p} needs "weights" and "bias" arrays`)
  }
  if (head.weights.length < 2 || head.weights.length !== head.bias.length) {
    throw new Error('head needs >= 2 classes and one bias per class')
  }
  for (const row of head.weights) {
    if (row.length !== featDim) {
      throw new Error(
        `head weight rows have ${row.length} columns, backbone emits ${featDim}`,
      )
    }
  }
  return head
}

const IMAGE_EXTENSIONS = new Set(['.png'])

export function listImages(dir: string): string[] {
  const entries = fs
    .readdirSync(dir, { withFileTypes: true })
    .filter((e) => e.isFile() && IMAGE_EXTENSIONS.has(path.extname(e.name).toLowerCase()))
    .map((e) => e.name)
  entries.sort()
  return entries
}

export function extract(
  cfg: ExtractConfig,
  log: (msg: string) => void = (m) => console.error(m),
): ExtractResult {
  const backboneId = cfg.backbone ?? 'patch-stats-v1'
  const imageSize = cfg.imageSize ?? 32
  const batchSize = cfg.batchSize ?? 16
  if (batchSize < 1) throw new Error('batch size must be positive')
  const backbone: Backbone = makeBackbone(backboneId, imageSize)

  const names = listImages(cfg.inputDir)
  if (names.length === 0) {
    throw new Error(`no images found in ${cfg.inputDir}`)
  }
  const head = cfg.headWeightsPath ? loadHead(cfg.headWeightsPath, backbone.dim) : null

  const rows: Float64Array[] = []
  const kept: string[] = []
  const skipped: string[] = []
  for (let start = 0; start < names.length; start += batchSize) {
    for (const name of names.slice(start, start + batchSize)) {
      const file = path.join(cfg.inputDir, name)
      try {
        rows.push(backbone.embed(decodePng(fs.readFileSync(file))))
        kept.push(name)
      } catch (e) {
        skipped.push(name)
        log(`warning: skipping unreadable image ${name}: ${(e as Error).message}`)
      }
    }
  }
  if (rows.length === 0) {
    throw new Error(`no readable images in ${cfg.inputDir}`)
  }

  const featDim = backbone.dim
  const features = new Float32Array(rows.length * featDim)
  rows.forEach((r, i) => features.set(Float32Array.from(r), i * featDim))

  let logits: Float32Array | undefined
  let nClasses: number | undefined
  if (head) {
    nClasses = head.weights.length
    logits = new Float32Array(rows.length * nClasses)
    rows.forEach((r, i) => {
      for (let c = 0; c < nClasses!; c++) {
        let s = head.bias[c]
        for (let d = 0; d < featDim; d++) s += head.weights[c][d] * r[d]
        logits![i * nClasses! + c] = s
      }
    })
  }

  const digest = writeFeatureFile(
    {
      features,
      nRows: rows.length,
      featDim,
      logits,
      nClasses,
      meta: {
        source: path.basename(path.resolve(cfg.inputDir)),
        split: 'extract',
        seed: 0,
        backbone: backbone.id,
        image_size: imageSize,
        preprocessing: `bilinear-resize-${imageSize};${backbone.id}`,
        images: kept,
        skipped,
      },
    },
    cfg.output,
  )
  return { output: cfg.output, digest, nRows: rows.length, featDim, skipped }
}
