import { it } from 'vitest';

import { checkPresetEquivalence, seedList } from './equivalence.js';

it('cifar-wrn: augmentBuffer matches the CLI byte-for-byte across 50 seeds', () => {
  checkPresetEquivalence('cifar-wrn', seedList(50, 1));
});
