#!/usr/bin/env node
/**
 * Command line for the extractor. Exit codes: 0 success, 1 bad
 * arguments/unreadable inputs, 2 write failures.
 */

import { parseArgs } from 'node:util'

import { extract } from './extract.js'

const HELP = `usage: oodf-extract --input-dir DIR --output FILE.oodf [options]

options:
  --input-dir DIR       folder of images (PNG), one feature row per image
  --output FILE         OODF v1 output path (sidecar written alongside)
  --backbone ID         embedding backbone (default: patch-stats-v1)
  --image-size N        square resize before embedding (default: 32)
  --batch-size N        images decoded per batch (default: 16)
  --head-weights FILE   optional JSON {"weights": CxD, "bias": [C]} for logits
  --help
`

export function main(argv: string[]): number {
  let parsed
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        'input-dir': { type: 'string' },
        output: { type: 'string' },
        backbone: { type: 'string', default: 'patch-stats-v1' },
        'image-size': { type: 'string', default: '32' },
        'batch-size': { type: 'string', default: '16' },
        'head-weights': { type: 'string' },
        help: { type: 'boolean', default: false },
      },
    })
  } catch (e) {
    process.stderr.write(`error: ${(e as Error).message}\n${HELP}`)
    return 1
  }
  const v = parsed.values
  if (v.help) {
    process.stdout.write(HELP)
    return 0
  }
  if (!v['input-dir'] || !v.output) {
    process.stderr.write(`error: --input-dir and --output are required\n${HELP}`)
    return 1
  }
  try {
    const result = extract({
      inputDir: v['input-dir'],
      output: v.output,
      backbone: v.backbone,
      imageSize: Number(v['image-size']),
      batchSize: Number(v['batch-size']),
      headWeightsPath: v['head-weights'],
    })
    process.stdout.write(
      JSON.stringify(
        {
          output: result.output,
          digest: result.digest,
          n_rows: result.nRows,
          feat_dim: result.featDim,
          skipped: result.skipped,
        },
        null,
        2,
      ) + '\n',
    )
    return 0
  } catch (e) {
    const msg = (e as Error).message
    process.stderr.write(`error: ${msg}\n`)
    return /EACCES|ENOSPC|EROFS|rename|write/i.test(msg) ? 2 : 1
  }
}

if (process.argv[1] && import.meta.url.endsWith(process.argv[1].split('/').pop()!)) {
  process.exit(main(process.argv.slice(2)))
}
